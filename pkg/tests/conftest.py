import os

# keep BLAS single-threaded before numpy loads anywhere in the session;
# the suite's matrices are tiny and thread pools only add latency
for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")
