/**
 * CSV loading against the simulator's documented schemas.
 *
 * Every loader validates the header before touching rows, so a truncated or
 * foreign file fails fast with the missing column spelled out.
 */

import * as fs from "fs";
import Papa from "papaparse";

export class SchemaError extends Error {
  constructor(public readonly file: string, public readonly column: string) {
    super(`missing column "${column}" in ${file}`);
    this.name = "SchemaError";
  }
}

export type Row = Record<string, string | number | null>;

export const ROUNDS_COLUMNS = [
  "round", "success", "completed_in_time", "min_updates_met", "quorum_approved",
  "no_regression", "updates_collected", "val_acc_before", "val_acc_after",
  "test_acc", "round_time_s", "leader", "views", "consensus_latency_s",
  "epsilon", "failure_reason",
];

export const REPUTATION_COLUMNS = ["round", "node", "role", "score", "uncertainty"];

export const CONSENSUS_COLUMNS = [
  "round", "epoch", "op_class", "quorum", "total_weight", "approval_weight",
  "status", "views", "latency_s", "oracle", "match",
];

export const NETWORK_COLUMNS = [
  "round", "alive", "departures", "arrivals", "returns",
  "gossip_coverage_r3", "gossip_rounds_to_99", "gossip_time_s", "mean_rtt_ms",
];

export function loadCsv(path: string, requiredColumns: string[]): Row[] {
  const text = fs.readFileSync(path, "utf8");
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  for (const column of requiredColumns) {
    if (!fields.includes(column)) {
      throw new SchemaError(path, column);
    }
  }
  return parsed.data;
}

export function num(row: Row, column: string): number {
  const v = row[column];
  if (typeof v === "number" && Number.isFinite(v)) return v;
  const parsed = Number(v);
  return Number.isFinite(parsed) ? parsed : NaN;
}

export function mean(values: number[]): number {
  if (values.length === 0) return NaN;
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function percentile(values: number[], p: number): number {
  if (values.length === 0) return NaN;
  const sorted = [...values].sort((a, b) => a - b);
  const idx = (sorted.length - 1) * p;
  const lo = Math.floor(idx);
  const hi = Math.ceil(idx);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (idx - lo);
}
