import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, describe, expect, it } from "vitest";

import {
  BindingDataset,
  fromArrays,
  loadContainer,
  readContainer,
  saveContainer,
  writeContainer,
} from "../src/container.js";
import { runCli } from "../src/cli.js";

const cleanups: string[] = [];

function workdir(): string {
  const dir = mkdtempSync(join(tmpdir(), "dt-test-"));
  cleanups.push(dir);
  return dir;
}

afterEach(() => {
  while (cleanups.length) rmSync(cleanups.pop()!, { recursive: true, force: true });
});

function sampleDataset(): BindingDataset {
  return fromArrays(
    [
      [
        [1.0, 2.0, 3.0],
        [4.0, 5.0, 6.0],
      ],
      [[0.5, -0.25, 1.75]],
      [
        [9.0, 8.0, 7.0],
        [6.0, 5.0, 4.0],
        [3.0, 2.0, 1.0],
      ],
    ],
    { tasks: ["vqa", "caption", "vqa"], rounds: [1, 2, 3] },
  );
}

describe("container round-trips", () => {
  it("write/read preserves every field bit-exactly", () => {
    const ds = sampleDataset();
    const back = readContainer(writeContainer(ds));
    expect(back.tasks).toEqual(ds.tasks);
    expect(back.samples.length).toBe(ds.samples.length);
    for (let i = 0; i < ds.samples.length; i++) {
      const a = ds.samples[i];
      const b = back.samples[i];
      expect([b.id, b.taskId, b.rounds, b.rows, b.cols]).toEqual([
        a.id,
        a.taskId,
        a.rounds,
        a.rows,
        a.cols,
      ]);
      expect(Buffer.from(b.data.buffer)).toEqual(Buffer.from(a.data.buffer));
    }
  });

  it("re-serializing a loaded container reproduces the bytes", () => {
    const blob = writeContainer(sampleDataset());
    expect(writeContainer(readContainer(blob)).equals(blob)).toBe(true);
  });

  it("rejects bad magic, bad version and truncation", () => {
    const blob = writeContainer(sampleDataset());
    const wrongMagic = Buffer.from(blob);
    wrongMagic.write("XXXX", 0, "ascii");
    expect(() => readContainer(wrongMagic)).toThrow(/bad magic/);
    const wrongVersion = Buffer.from(blob);
    wrongVersion.writeUInt32LE(9, 4);
    expect(() => readContainer(wrongVersion)).toThrow(/unsupported version/);
    expect(() => readContainer(blob.subarray(0, blob.length - 3))).toThrow(/truncated payload/);
  });

  it("fromArrays rejects ragged rows with a dimension mismatch", () => {
    expect(() =>
      fromArrays([
        [
          [1.0, 2.0],
          [3.0],
        ],
      ]),
    ).toThrow(/dimension mismatch/);
  });

  it("fromArrays rejects inconsistent feature dimensions", () => {
    expect(() => fromArrays([[[1, 2]], [[1, 2, 3]]])).toThrow(/dimension mismatch/);
  });
});

describe("cross-implementation round-trips", () => {
  it("engine-written containers load here and re-serialize byte-identically", () => {
    const dir = workdir();
    const spec = join(dir, "spec.json");
    writeFileSync(
      spec,
      JSON.stringify({
        d: 8,
        tasks: [
          { name: "a", n_clusters: 2, samples_per_cluster: 6, duplicate_fraction: 0.25 },
          { name: "b", n_clusters: 1, samples_per_cluster: 5 },
        ],
      }),
    );
    const container = join(dir, "c.dtlr");
    runCli(["synth", spec, "--seed", "5", "--out", container]);
    const ds = loadContainer(container);
    expect(ds.tasks).toEqual(["a", "b"]);
    expect(ds.samples.length).toBe(17);
    const rewritten = join(dir, "copy.dtlr");
    saveContainer(ds, rewritten);
    const original = readContainer(writeContainer(ds));
    expect(writeContainer(original).equals(writeContainer(ds))).toBe(true);
    expect(loadContainer(rewritten)).toEqual(ds);
  });

  it("containers written here are accepted by the engine", () => {
    const dir = workdir();
    const path = join(dir, "local.dtlr");
    saveContainer(sampleDataset(), path);
    const out = join(dir, "scores.csv");
    runCli(["score", path, "--out", out]);
  });
});
