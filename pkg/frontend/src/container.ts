/**
 * Reader/writer for the DTLR feature container.
 *
 * Layout (all integers little-endian):
 *   magic "DTLR" | u32 version (1) | u32 n_tasks
 *   per task: u16 name_len + UTF-8 name bytes
 *   u64 n_samples
 *   per sample: u64 id, u32 task_id, u32 rounds, u32 L, u32 d,
 *               then L*d float32, row-major
 *
 * The writer is canonical: the same logical dataset always produces the
 * same bytes, so containers round-trip bit-exactly across implementations.
 */

import { readFileSync, writeFileSync } from "node:fs";

export const MAGIC = "DTLR";
export const VERSION = 1;

export interface SampleRecord {
  id: number;
  taskId: number;
  rounds: number;
  rows: number;
  cols: number;
  /** row-major token features, rows * cols entries; final row = sample point */
  data: Float32Array;
}

export interface BindingDataset {
  tasks: string[];
  samples: SampleRecord[];
}

const HOST_LE = (() => {
  const probe = new Uint8Array(new Uint32Array([1]).buffer);
  return probe[0] === 1;
})();

export function writeContainer(dataset: BindingDataset): Buffer {
  const encoder = new TextEncoder();
  const taskBytes = dataset.tasks.map((name) => encoder.encode(name));
  let size = 4 + 4 + 4;
  for (const t of taskBytes) {
    if (t.length > 0xffff) throw new Error(`task name too long (${t.length} bytes)`);
    size += 2 + t.length;
  }
  size += 8;
  for (const s of dataset.samples) {
    if (s.data.length !== s.rows * s.cols) {
      throw new Error(
        `dimension mismatch: sample ${s.id} has ${s.data.length} values for ${s.rows}x${s.cols}`,
      );
    }
    size += 8 + 4 + 4 + 4 + 4 + s.data.length * 4;
  }

  const buf = Buffer.allocUnsafe(size);
  let off = 0;
  buf.write(MAGIC, off, "ascii");
  off += 4;
  off = buf.writeUInt32LE(VERSION, off);
  off = buf.writeUInt32LE(dataset.tasks.length, off);
  for (const t of taskBytes) {
    off = buf.writeUInt16LE(t.length, off);
    buf.set(t, off);
    off += t.length;
  }
  off = buf.writeBigUInt64LE(BigInt(dataset.samples.length), off);
  for (const s of dataset.samples) {
    off = buf.writeBigUInt64LE(BigInt(s.id), off);
    off = buf.writeUInt32LE(s.taskId, off);
    off = buf.writeUInt32LE(s.rounds, off);
    off = buf.writeUInt32LE(s.rows, off);
    off = buf.writeUInt32LE(s.cols, off);
    if (HOST_LE) {
      buf.set(new Uint8Array(s.data.buffer, s.data.byteOffset, s.data.byteLength), off);
      off += s.data.byteLength;
    } else {
      const view = new DataView(buf.buffer, buf.byteOffset + off);
      for (let i = 0; i < s.data.length; i++) view.setFloat32(i * 4, s.data[i], true);
      off += s.data.length * 4;
    }
  }
  return buf;
}

class Cursor {
  pos = 0;
  constructor(private readonly buf: Buffer) {}

  private need(size: number, what: string): number {
    if (this.pos + size > this.buf.length) {
      throw new Error(`truncated payload: ${what} needs ${size} bytes`);
    }
    const at = this.pos;
    this.pos += size;
    return at;
  }

  u16(what: string): number {
    return this.buf.readUInt16LE(this.need(2, what));
  }

  u32(what: string): number {
    return this.buf.readUInt32LE(this.need(4, what));
  }

  u64(what: string): number {
    const value = this.buf.readBigUInt64LE(this.need(8, what));
    if (value > BigInt(Number.MAX_SAFE_INTEGER)) {
      throw new Error(`${what} exceeds Number.MAX_SAFE_INTEGER`);
    }
    return Number(value);
  }

  bytes(size: number, what: string): Buffer {
    const at = this.need(size, what);
    return this.buf.subarray(at, at + size);
  }

  get exhausted(): boolean {
    return this.pos === this.buf.length;
  }
}

export function readContainer(buf: Buffer): BindingDataset {
  const cur = new Cursor(buf);
  const magic = cur.bytes(4, "magic").toString("ascii");
  if (magic !== MAGIC) throw new Error(`bad magic: ${JSON.stringify(magic)}`);
  const version = cur.u32("version");
  if (version !== VERSION) throw new Error(`unsupported version: ${version}`);
  const nTasks = cur.u32("task count");
  const tasks: string[] = [];
  for (let t = 0; t < nTasks; t++) {
    const len = cur.u16("task name length");
    tasks.push(cur.bytes(len, "task name").toString("utf-8"));
  }
  const nSamples = cur.u64("sample count");
  const samples: SampleRecord[] = [];
  let dRef = -1;
  for (let i = 0; i < nSamples; i++) {
    const id = cur.u64(`record ${i} id`);
    const taskId = cur.u32(`record ${i} task id`);
    const rounds = cur.u32(`record ${i} rounds`);
    const rows = cur.u32(`record ${i} rows`);
    const cols = cur.u32(`record ${i} cols`);
    if (taskId >= nTasks) throw new Error(`record ${i}: task id ${taskId} out of range`);
    if (dRef === -1) dRef = cols;
    else if (cols !== dRef) {
      throw new Error(`dimension mismatch: record ${i} has d=${cols}, expected ${dRef}`);
    }
    const payload = cur.bytes(rows * cols * 4, `record ${i} payload`);
    const data = new Float32Array(rows * cols);
    const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
    for (let j = 0; j < data.length; j++) data[j] = view.getFloat32(j * 4, true);
    samples.push({ id, taskId, rounds, rows, cols, data });
  }
  if (!cur.exhausted) {
    throw new Error(`trailing bytes after last record: ${buf.length - cur.pos}`);
  }
  return { tasks, samples };
}

export function loadContainer(path: string): BindingDataset {
  return readContainer(readFileSync(path));
}

export function saveContainer(dataset: BindingDataset, path: string): void {
  writeFileSync(path, writeContainer(dataset));
}

export type MatrixLike = number[][] | Float32Array[];

export interface FromArraysOptions {
  tasks?: Array<string | number>;
  rounds?: number[];
  ids?: number[];
}

/** Build a dataset from in-memory matrices (one 2-D matrix per sample). */
export function fromArrays(matrices: MatrixLike[], options: FromArraysOptions = {}): BindingDataset {
  if (matrices.length === 0) throw new Error("invalid dataset: no samples");
  const n = matrices.length;
  const taskLabels = options.tasks ?? new Array<string>(n).fill("default");
  const rounds = options.rounds ?? new Array<number>(n).fill(1);
  const ids = options.ids ?? Array.from({ length: n }, (_, i) => i);
  if (taskLabels.length !== n || rounds.length !== n || ids.length !== n) {
    throw new Error("invalid dataset: metadata length disagrees with matrices");
  }

  const table: string[] = [];
  const index = new Map<string, number>();
  const samples: SampleRecord[] = [];
  let dRef = -1;
  for (let i = 0; i < n; i++) {
    const rowsIn = matrices[i];
    const rows = rowsIn.length;
    if (rows === 0) throw new Error(`dimension mismatch: sample ${i} has no rows`);
    const cols = rowsIn[0].length;
    const data = new Float32Array(rows * cols);
    for (let r = 0; r < rows; r++) {
      const row = rowsIn[r];
      if (row.length !== cols) {
        throw new Error(`dimension mismatch: sample ${i} row ${r} has ${row.length} values, expected ${cols}`);
      }
      data.set(row, r * cols);
    }
    if (dRef === -1) dRef = cols;
    else if (cols !== dRef) {
      throw new Error(`dimension mismatch: sample ${i} has d=${cols}, expected ${dRef}`);
    }
    const label = String(taskLabels[i]);
    if (!index.has(label)) {
      index.set(label, table.length);
      table.push(label);
    }
    samples.push({
      id: ids[i],
      taskId: index.get(label)!,
      rounds: rounds[i],
      rows,
      cols,
      data,
    });
  }
  return { tasks: table, samples };
}
