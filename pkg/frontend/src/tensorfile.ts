/**
 * CWTN tensor files: magic "CWTN", u16 version (=1), u8 element kind
 * (0 = float64, 1 = complex128 with interleaved re/im), u8 rank,
 * rank x u32 dims, then the row-major little-endian float64 payload.
 * Round trips are bit-exact.
 */

const MAGIC = 0x4e545743; // "CWTN" little-endian
const VERSION = 1;

export type ElementKind = "real" | "complex";

export interface TensorData {
  kind: ElementKind;
  dims: number[];
  /** row-major float64; complex tensors interleave re/im (2 per element) */
  data: Float64Array;
}

export function encodeCwtn(tensor: TensorData): Uint8Array {
  const { kind, dims, data } = tensor;
  const elements = dims.reduce((a, b) => a * b, 1);
  const perElement = kind === "complex" ? 2 : 1;
  if (data.length !== elements * perElement) {
    throw new Error(
      `payload length ${data.length} does not match dims ${dims} (${kind})`,
    );
  }
  const headerBytes = 8 + 4 * dims.length;
  const out = new Uint8Array(headerBytes + data.length * 8);
  const view = new DataView(out.buffer);
  view.setUint32(0, MAGIC, true);
  view.setUint16(4, VERSION, true);
  view.setUint8(6, kind === "complex" ? 1 : 0);
  view.setUint8(7, dims.length);
  dims.forEach((dim, i) => view.setUint32(8 + 4 * i, dim, true));
  for (let i = 0; i < data.length; i++) {
    view.setFloat64(headerBytes + 8 * i, data[i], true);
  }
  return out;
}

export function decodeCwtn(bytes: Uint8Array): TensorData {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (bytes.length < 8 || view.getUint32(0, true) !== MAGIC) {
    throw new Error("not a CWTN tensor (bad magic)");
  }
  if (view.getUint16(4, true) !== VERSION) {
    throw new Error(`unsupported CWTN version ${view.getUint16(4, true)}`);
  }
  const kindByte = view.getUint8(6);
  if (kindByte !== 0 && kindByte !== 1) {
    throw new Error(`unknown CWTN element kind ${kindByte}`);
  }
  const rank = view.getUint8(7);
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) {
    dims.push(view.getUint32(8 + 4 * i, true));
  }
  const headerBytes = 8 + 4 * rank;
  const perElement = kindByte === 1 ? 2 : 1;
  const count = dims.reduce((a, b) => a * b, 1) * perElement;
  if (bytes.length - headerBytes !== count * 8) {
    throw new Error(
      `CWTN payload is ${bytes.length - headerBytes} bytes, expected ${count * 8}`,
    );
  }
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = view.getFloat64(headerBytes + 8 * i, true);
  }
  return { kind: kindByte === 1 ? "complex" : "real", dims, data };
}
