/**
 * Flat-array entry points for the cwmi loss toolkit.
 *
 * Every call goes through the toolkit's external interfaces only: inputs are
 * written as bit-exact CWTN tensors into a scratch directory, the CLI is
 * invoked, and results come back from its JSON line and output tensors.
 * Symbols are versioned (cwmi_v1_*); results are bitwise stable across
 * repeated calls and the layer holds no global mutable state.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { runCli } from "./runner.js";
import { decodeCwtn, encodeCwtn, TensorData } from "./tensorfile.js";

export { CwmiCliError } from "./runner.js";
export { decodeCwtn, encodeCwtn } from "./tensorfile.js";
export type { ElementKind, TensorData } from "./tensorfile.js";

/** A dense row-major float64 matrix view. */
export interface ArrayView {
  data: Float64Array;
  height: number;
  width: number;
}

export type LossVariant =
  | "cwmi"
  | "cwmi_real"
  | "wavelet_l1"
  | "wavelet_l2"
  | "wavelet_ssim"
  | "ce_only";

export interface LossOptions {
  levels?: number;
  orientations?: number;
  lambda?: number;
  epsilon?: number;
  variant?: LossVariant;
  wantGradient?: boolean;
}

export interface LossResult {
  total: number;
  ceTerm: number;
  perLevel: number[];
  gradient?: ArrayView;
}

export interface MetricsReport {
  miou: number;
  mdice: number;
  vi: number;
  ari: number;
  hd: number;
}

export interface DecomposeOptions {
  levels?: number;
  orientations?: number;
  mode?: "real" | "complex";
}

export interface Decomposition {
  highResidue: TensorData;
  lowResidue: TensorData;
  /** bands[level][orientation], levels from finest to coarsest */
  bands: TensorData[][];
}

function checkView(view: ArrayView, name: string): void {
  if (view.data.length !== view.height * view.width) {
    throw new Error(
      `${name}: buffer has ${view.data.length} elements, expected ` +
        `${view.height}x${view.width}`,
    );
  }
}

function checkPair(label: ArrayView, pred: ArrayView): void {
  checkView(label, "label");
  checkView(pred, "pred");
  if (label.height !== pred.height || label.width !== pred.width) {
    throw new Error(
      `shape mismatch: label ${label.height}x${label.width} vs ` +
        `pred ${pred.height}x${pred.width}`,
    );
  }
}

function writeView(path: string, view: ArrayView): void {
  writeFileSync(
    path,
    encodeCwtn({ kind: "real", dims: [view.height, view.width], data: view.data }),
  );
}

function withScratchDir<T>(body: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "cwmi-"));
  try {
    return body(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** Composite loss (and optionally its gradient) on a label/prediction pair. */
export function cwmi_v1_loss(
  label: ArrayView,
  pred: ArrayView,
  options: LossOptions = {},
): LossResult {
  checkPair(label, pred);
  const {
    levels = 4,
    orientations = 4,
    lambda = 0.1,
    epsilon = 1e-5,
    variant = "cwmi",
    wantGradient = false,
  } = options;
  return withScratchDir((dir) => {
    const labelPath = join(dir, "label.cwtn");
    const predPath = join(dir, "pred.cwtn");
    writeView(labelPath, label);
    writeView(predPath, pred);
    const args = [
      "loss",
      "--label", labelPath,
      "--pred", predPath,
      "--variant", variant,
      "--lambda", String(lambda),
      "--epsilon", String(epsilon),
      "--levels", String(levels),
      "--orients", String(orientations),
    ];
    const gradPath = join(dir, "grad.cwtn");
    if (wantGradient) {
      args.push("--grad", gradPath);
    }
    const payload = runCli(args);
    const result: LossResult = {
      total: payload.total as number,
      ceTerm: payload.ce_term as number,
      perLevel: payload.per_level as number[],
    };
    if (wantGradient) {
      const grad = decodeCwtn(readFileSync(gradPath));
      result.gradient = {
        data: grad.data,
        height: grad.dims[0],
        width: grad.dims[1],
      };
    }
    return result;
  });
}

/** All five segmentation metrics of a thresholded prediction. */
export function cwmi_v1_metrics(
  label: ArrayView,
  pred: ArrayView,
  threshold = 0.5,
): MetricsReport {
  checkPair(label, pred);
  return withScratchDir((dir) => {
    const labelPath = join(dir, "label.cwtn");
    const predPath = join(dir, "pred.cwtn");
    writeView(labelPath, label);
    writeView(predPath, pred);
    const payload = runCli([
      "metrics",
      "--label", labelPath,
      "--pred", predPath,
      "--threshold", String(threshold),
    ]);
    return payload as unknown as MetricsReport;
  });
}

/** Steerable-pyramid decomposition into residues and oriented subbands. */
export function cwmi_v1_decompose(
  image: ArrayView,
  options: DecomposeOptions = {},
): Decomposition {
  checkView(image, "image");
  const { levels = 4, orientations = 4, mode = "complex" } = options;
  return withScratchDir((dir) => {
    const imagePath = join(dir, "image.cwtn");
    writeView(imagePath, image);
    const outDir = join(dir, "out");
    runCli([
      "decompose",
      "--input", imagePath,
      "--levels", String(levels),
      "--orients", String(orientations),
      "--mode", mode,
      "--out-dir", outDir,
    ]);
    const read = (name: string) => decodeCwtn(readFileSync(join(outDir, name)));
    const bands: TensorData[][] = [];
    for (let level = 1; level <= levels; level++) {
      const stack: TensorData[] = [];
      for (let orient = 1; orient <= orientations; orient++) {
        stack.push(read(`band_l${level}_o${orient}.cwtn`));
      }
      bands.push(stack);
    }
    return {
      highResidue: read("high_residue.cwtn"),
      lowResidue: read("low_residue.cwtn"),
      bands,
    };
  });
}
