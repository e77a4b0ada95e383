/** Parser for the engine's scores.csv tables. */

export interface ScoreRow {
  sampleId: number;
  task: string;
  rounds: number;
  clusterId: number;
  vInfRaw: number;
  vInf: number;
  vUni: number;
  vRep: number;
  vSynergy: number;
  selected?: boolean;
}

function splitCsvLine(line: string): string[] {
  const out: string[] = [];
  let field = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      out.push(field);
      field = "";
    } else {
      field += ch;
    }
  }
  out.push(field);
  return out;
}

export function parseScoresCsv(text: string): ScoreRow[] {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) throw new Error("empty scores table");
  const header = splitCsvLine(lines[0]);
  const col = (name: string): number => {
    const at = header.indexOf(name);
    if (at === -1) throw new Error(`scores table missing column ${name}`);
    return at;
  };
  const selectedAt = header.indexOf("selected");
  const idx = {
    sampleId: col("sample_id"),
    task: col("task"),
    rounds: col("rounds"),
    clusterId: col("cluster_id"),
    vInfRaw: col("v_inf_raw"),
    vInf: col("v_inf"),
    vUni: col("v_uni"),
    vRep: col("v_rep"),
    vSynergy: col("v_synergy"),
  };
  return lines.slice(1).map((line) => {
    const fields = splitCsvLine(line);
    const row: ScoreRow = {
      sampleId: Number(fields[idx.sampleId]),
      task: fields[idx.task],
      rounds: Number(fields[idx.rounds]),
      clusterId: Number(fields[idx.clusterId]),
      vInfRaw: Number(fields[idx.vInfRaw]),
      vInf: Number(fields[idx.vInf]),
      vUni: Number(fields[idx.vUni]),
      vRep: Number(fields[idx.vRep]),
      vSynergy: Number(fields[idx.vSynergy]),
    };
    if (selectedAt !== -1) row.selected = fields[selectedAt] === "1";
    return row;
  });
}
