/**
 * The evaluation figure family. Each figure declares which experiment feeds
 * it and renders a deterministic SVG from the documented CSV schemas.
 */

import * as fs from "fs";
import * as path from "path";

import {
  CONSENSUS_COLUMNS,
  NETWORK_COLUMNS,
  REPUTATION_COLUMNS,
  ROUNDS_COLUMNS,
  Row,
  loadCsv,
  mean,
  num,
  percentile,
} from "./csv";
import { ExperimentRuns, loadExperiment } from "./manifest";
import { PALETTE, SvgCanvas, linearScale, MARGIN, WIDTH, HEIGHT, xScale, yScale, niceTicks, fmt } from "./svg";

export interface FigureResult {
  figureId: string;
  fileName: string;
  svg: string;
}

export interface FigureSpec {
  figureId: string;
  experiment: string;
  description: string;
  render: (runs: ExperimentRuns) => FigureResult;
}

const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

function roundsOf(runDir: string): Row[] {
  return loadCsv(path.join(runDir, "rounds.csv"), ROUNDS_COLUMNS);
}

function lastFinite(rows: Row[], column: string): number {
  for (let i = rows.length - 1; i >= 0; i--) {
    const v = num(rows[i], column);
    if (Number.isFinite(v)) return v;
  }
  return NaN;
}

function groupedBars(
  canvas: SvgCanvas,
  labels: string[],
  groups: Array<{ name: string; values: number[]; color: string }>,
  yDomain: [number, number],
  xLabel: string,
  yLabel: string,
) {
  const x = xScale([0, labels.length]);
  const y = yScale(yDomain);
  canvas.axes(x, y, xLabel, yLabel, {
    xTicks: labels.map((_, i) => i + 0.5),
    xTickLabels: labels,
  });
  const slot = PLOT_W / Math.max(labels.length, 1);
  const barW = (slot * 0.72) / Math.max(groups.length, 1);
  groups.forEach((group, gi) => {
    group.values.forEach((v, i) => {
      if (!Number.isFinite(v)) return;
      const cx = MARGIN.left + slot * i + slot * 0.14 + barW * gi;
      canvas.rect(cx, y(v), barW, y(yDomain[0]) - y(v), group.color, 0.9);
    });
  });
  canvas.legend(groups.map((g) => [g.name, g.color]));
}

// -- fig4: DP-utility tradeoff (exp3) ---------------------------------------

function renderFig4(runs: ExperimentRuns): FigureResult {
  const canvas = new SvgCanvas("Record-level DP tradeoff: accuracy vs privacy budget");
  const sigmas: number[] = [];
  const accs: number[] = [];
  const epss: number[] = [];
  const arms = [...runs.arms.keys()].sort();
  for (const arm of arms) {
    const sigma = Number(arm.replace("sigma_", "").replace("p", "."));
    const finals: number[] = [];
    const epsFinals: number[] = [];
    for (const dir of runs.arms.get(arm)!) {
      const rows = roundsOf(dir);
      if (rows.length === 0) continue;
      finals.push(lastFinite(rows, "test_acc"));
      epsFinals.push(lastFinite(rows, "epsilon"));
    }
    if (finals.length === 0) continue;
    sigmas.push(sigma);
    accs.push(mean(finals));
    epss.push(mean(epsFinals.filter(Number.isFinite)));
  }
  if (sigmas.length === 0) {
    canvas.emptyNote("no data rows: empty axes");
    const x = xScale([0, 1]);
    const y = yScale([0, 1]);
    canvas.axes(x, y, "noise multiplier", "final test accuracy");
    return { figureId: "fig4", fileName: "fig4_dp_tradeoff.svg", svg: canvas.render() };
  }
  const labels = sigmas.map((s) => s.toString());
  groupedBars(canvas, labels, [{ name: "final accuracy", values: accs, color: PALETTE[0] }],
    [0, 1], "noise multiplier", "final test accuracy");
  const finiteEps = epss.filter(Number.isFinite);
  if (finiteEps.length > 0) {
    const yr = yScale([0, Math.max(...finiteEps) * 1.15 || 1]);
    canvas.rightAxis(yr, "privacy budget (epsilon)");
    const slot = PLOT_W / sigmas.length;
    const pts: Array<[number, number]> = [];
    epss.forEach((e, i) => {
      if (Number.isFinite(e)) pts.push([MARGIN.left + slot * (i + 0.5), yr(e)]);
    });
    canvas.polyline(pts, PALETTE[1], 2.5);
    pts.forEach(([px, py]) => canvas.circle(px, py, 3.5, PALETTE[1]));
  }
  return { figureId: "fig4", fileName: "fig4_dp_tradeoff.svg", svg: canvas.render() };
}

// -- fig5: selection strategies (exp4) ---------------------------------------

function renderFig5(runs: ExperimentRuns): FigureResult {
  const canvas = new SvgCanvas("Round success rate and P95 latency by selection strategy");
  const order = ["random", "capability", "load_balanced", "reputation"].filter((a) =>
    runs.arms.has(a),
  );
  const success: number[] = [];
  const p95: number[] = [];
  let sawRows = false;
  for (const arm of order) {
    const rates: number[] = [];
    const times: number[] = [];
    for (const dir of runs.arms.get(arm)!) {
      const rows = roundsOf(dir);
      if (rows.length === 0) continue;
      sawRows = true;
      rates.push(mean(rows.map((r) => num(r, "success"))));
      times.push(...rows.map((r) => num(r, "round_time_s")));
    }
    success.push(rates.length ? mean(rates) : NaN);
    p95.push(times.length ? percentile(times, 0.95) : NaN);
  }
  if (!sawRows) {
    canvas.emptyNote("no data rows: empty axes");
    canvas.axes(xScale([0, 1]), yScale([0, 1]), "selection strategy", "round success rate");
    return { figureId: "fig5", fileName: "fig5_selection.svg", svg: canvas.render() };
  }
  groupedBars(canvas, order, [{ name: "success rate", values: success, color: PALETTE[0] }],
    [0, 1], "selection strategy", "round success rate");
  const finite = p95.filter(Number.isFinite);
  if (finite.length) {
    const yr = yScale([0, Math.max(...finite) * 1.2]);
    canvas.rightAxis(yr, "P95 round time (s)");
    const slot = PLOT_W / order.length;
    const pts: Array<[number, number]> = [];
    p95.forEach((v, i) => {
      if (Number.isFinite(v)) pts.push([MARGIN.left + slot * (i + 0.5), yr(v)]);
    });
    canvas.polyline(pts, PALETTE[3], 2.5);
    pts.forEach(([px, py]) => canvas.circle(px, py, 3.5, PALETTE[3]));
  }
  return { figureId: "fig5", fileName: "fig5_selection.svg", svg: canvas.render() };
}

// -- fig6: Sybil degradation (exp5) -------------------------------------------

function renderFig6(runs: ExperimentRuns): FigureResult {
  const canvas = new SvgCanvas("Validation correctness under open-admission Sybil attack");
  const series = new Map<string, Array<[number, number]>>();
  let sawRows = false;
  for (const [arm, dirs] of [...runs.arms.entries()].sort()) {
    const match = arm.match(/^sybil(\d+)_(\w+)$/);
    if (!match) continue;
    const pct = Number(match[1]);
    const weighting = match[2];
    const vals: number[] = [];
    for (const dir of dirs) {
      const rows = loadCsv(path.join(dir, "consensus.csv"), CONSENSUS_COLUMNS);
      if (rows.length === 0) continue;
      sawRows = true;
      vals.push(mean(rows.map((r) => num(r, "match"))));
    }
    if (!vals.length) continue;
    if (!series.has(weighting)) series.set(weighting, []);
    series.get(weighting)!.push([pct, mean(vals)]);
  }
  const x = xScale([0, 30]);
  const y = yScale([0, 1]);
  canvas.axes(x, y, "sybil identities (% of honest nodes)", "validation correctness", {
    xTicks: [0, 10, 20, 30],
  });
  if (!sawRows) {
    canvas.emptyNote("no data rows: empty axes");
    return { figureId: "fig6", fileName: "fig6_sybil.svg", svg: canvas.render() };
  }
  const names = ["reputation", "puzzle", "equal", "stake"].filter((w) => series.has(w));
  const legend: Array<[string, string]> = [];
  names.forEach((name, i) => {
    const pts = series.get(name)!.sort((a, b) => a[0] - b[0]);
    const color = PALETTE[i];
    canvas.polyline(pts.map(([px, py]) => [x(px), y(py)]), color, 2.5);
    pts.forEach(([px, py]) => canvas.circle(x(px), y(py), 3.5, color));
    legend.push([name, color]);
  });
  canvas.legend(legend);
  return { figureId: "fig6", fileName: "fig6_sybil.svg", svg: canvas.render() };
}

// -- fig7: non-IID sensitivity (exp6) -----------------------------------------

function renderFig7(runs: ExperimentRuns): FigureResult {
  const canvas = new SvgCanvas("Non-IID sensitivity across Dirichlet concentrations");
  const alphas = new Set<string>();
  const byAgg = new Map<string, Map<string, number>>();
  let sawRows = false;
  for (const [arm, dirs] of [...runs.arms.entries()].sort()) {
    const match = arm.match(/^alpha_([\dp]+)_(\w+)$/);
    if (!match) continue;
    const alpha = match[1].replace("p", ".");
    const agg = match[2];
    const finals: number[] = [];
    for (const dir of dirs) {
      const rows = roundsOf(dir);
      if (rows.length === 0) continue;
      sawRows = true;
      finals.push(lastFinite(rows, "test_acc"));
    }
    if (!finals.length) continue;
    alphas.add(alpha);
    if (!byAgg.has(agg)) byAgg.set(agg, new Map());
    byAgg.get(agg)!.set(alpha, mean(finals));
  }
  if (!sawRows) {
    canvas.emptyNote("no data rows: empty axes");
    canvas.axes(xScale([0, 1]), yScale([0, 1]), "Dirichlet concentration", "final test accuracy");
    return { figureId: "fig7", fileName: "fig7_noniid.svg", svg: canvas.render() };
  }
  const labels = [...alphas].sort((a, b) => Number(a) - Number(b));
  const groups = [...byAgg.entries()].map(([agg, vals], i) => ({
    name: agg,
    values: labels.map((l) => vals.get(l) ?? NaN),
    color: PALETTE[i],
  }));
  groupedBars(canvas, labels, groups, [0, 1], "Dirichlet concentration", "final test accuracy");
  return { figureId: "fig7", fileName: "fig7_noniid.svg", svg: canvas.render() };
}

// -- fig8: aggregator robustness (exp1) ----------------------------------------

function renderFig8(runs: ExperimentRuns): FigureResult {
  const canvas = new SvgCanvas("Final accuracy by aggregator: benign vs 20% gradient flip");
  const aggs = ["rep_fedavg", "fedavg", "trimmed_mean", "krum"];
  const benign: number[] = [];
  const flipped: number[] = [];
  let sawRows = false;
  const collect = (arm: string): number => {
    const dirs = runs.arms.get(arm);
    if (!dirs) return NaN;
    const finals: number[] = [];
    for (const dir of dirs) {
      const rows = roundsOf(dir);
      if (rows.length === 0) continue;
      sawRows = true;
      finals.push(lastFinite(rows, "test_acc"));
    }
    return finals.length ? mean(finals) : NaN;
  };
  for (const agg of aggs) {
    benign.push(collect(`${agg}_benign`));
    flipped.push(collect(`${agg}_flip20`));
  }
  if (!sawRows) {
    canvas.emptyNote("no data rows: empty axes");
    canvas.axes(xScale([0, 1]), yScale([0, 1]), "aggregator", "final test accuracy");
    return { figureId: "fig8", fileName: "fig8_robustness.svg", svg: canvas.render() };
  }
  groupedBars(
    canvas,
    aggs,
    [
      { name: "benign", values: benign, color: PALETTE[2] },
      { name: "20% flip", values: flipped, color: PALETTE[1] },
    ],
    [0, 1],
    "aggregator",
    "final test accuracy",
  );
  return { figureId: "fig8", fileName: "fig8_robustness.svg", svg: canvas.render() };
}

// -- fig9: infrastructure scalability (exp7) ------------------------------------

function renderFig9(runs: ExperimentRuns, root: string): FigureResult {
  const canvas = new SvgCanvas("Routing hops and gossip convergence vs network size");
  const infraPath = [path.join(root, "exp7", "infrastructure.json"), path.join(root, "infrastructure.json")]
    .find((p) => fs.existsSync(p));
  if (!infraPath) {
    canvas.emptyNote("no infrastructure.json: empty axes");
    canvas.axes(xScale([0, 1]), yScale([0, 1]), "network size", "mean lookup hops");
    return { figureId: "fig9", fileName: "fig9_scalability.svg", svg: canvas.render() };
  }
  const infra = JSON.parse(fs.readFileSync(infraPath, "utf8")) as Record<string, {
    nodes: number;
    mean_lookup_hops: number;
    log2_ceiling: number;
    gossip_rounds_to_99: number;
  }>;
  const entries = Object.values(infra).sort((a, b) => a.nodes - b.nodes);
  const labels = entries.map((e) => String(e.nodes));
  groupedBars(
    canvas,
    labels,
    [
      { name: "mean hops", values: entries.map((e) => e.mean_lookup_hops), color: PALETTE[0] },
      { name: "ceil(log2 n)", values: entries.map((e) => e.log2_ceiling), color: "#bfdbfe" },
    ],
    [0, Math.max(...entries.map((e) => e.log2_ceiling)) * 1.3],
    "network size (nodes)",
    "lookup hops",
  );
  const gossip = entries.map((e) => e.gossip_rounds_to_99);
  const yr = yScale([0, Math.max(...gossip, 1) * 1.5]);
  canvas.rightAxis(yr, "gossip rounds to 99%");
  const slot = PLOT_W / labels.length;
  const pts: Array<[number, number]> = gossip.map((g, i) => [MARGIN.left + slot * (i + 0.5), yr(g)]);
  canvas.polyline(pts, PALETTE[3], 2.5);
  pts.forEach(([px, py]) => canvas.circle(px, py, 3.5, PALETTE[3]));
  return { figureId: "fig9", fileName: "fig9_scalability.svg", svg: canvas.render() };
}

// -- fig10: reputation trajectories (exp10) --------------------------------------

const ROLE_COLORS: Record<string, string> = {
  honest: PALETTE[0],
  byzantine: PALETTE[1],
  unreliable: PALETTE[3],
  sybil: PALETTE[4],
};

function renderFig10(runs: ExperimentRuns): FigureResult {
  const canvas = new SvgCanvas("Reputation trajectories: mean per role with per-node samples");
  const dirs = runs.arms.get("dynamics") ?? [...runs.arms.values()][0] ?? [];
  if (dirs.length === 0) {
    canvas.emptyNote("no runs: empty axes");
    canvas.axes(xScale([0, 1]), yScale([0, 1]), "round", "reputation score");
    return { figureId: "fig10", fileName: "fig10_reputation.svg", svg: canvas.render() };
  }
  const rows = loadCsv(path.join(dirs[0], "reputation.csv"), REPUTATION_COLUMNS);
  const x0 = rows.length ? Math.max(...rows.map((r) => num(r, "round"))) : 1;
  const x = xScale([0, Math.max(x0, 1)]);
  const y = yScale([0, 1]);
  canvas.axes(x, y, "round", "reputation score");
  if (rows.length === 0) {
    canvas.emptyNote("no data rows: empty axes");
    return { figureId: "fig10", fileName: "fig10_reputation.svg", svg: canvas.render() };
  }

  const byNode = new Map<string, { role: string; points: Array<[number, number]> }>();
  const roleSums = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    const node = String(row.node);
    const role = String(row.role);
    const round = num(row, "round");
    const score = num(row, "score");
    if (!byNode.has(node)) byNode.set(node, { role, points: [] });
    byNode.get(node)!.points.push([round, score]);
    if (!roleSums.has(role)) roleSums.set(role, new Map());
    const perRound = roleSums.get(role)!;
    if (!perRound.has(round)) perRound.set(round, []);
    perRound.get(round)!.push(score);
  }

  // thin per-node samples, a bounded number per role
  const perRoleShown = new Map<string, number>();
  for (const [, { role, points }] of [...byNode.entries()].sort()) {
    const shown = perRoleShown.get(role) ?? 0;
    if (shown >= 12) continue;
    perRoleShown.set(role, shown + 1);
    const color = ROLE_COLORS[role] ?? PALETTE[9];
    canvas.polyline(
      points.sort((a, b) => a[0] - b[0]).map(([r, s]) => [x(r), y(s)]),
      color, 0.7, 0.28,
    );
  }
  // thick mean trajectories
  const legend: Array<[string, string]> = [];
  for (const [role, perRound] of [...roleSums.entries()].sort()) {
    const color = ROLE_COLORS[role] ?? PALETTE[9];
    const pts = [...perRound.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([round, scores]) => [x(round), y(mean(scores))] as [number, number]);
    canvas.polyline(pts, color, 3.2);
    legend.push([`${role} (mean)`, color]);
  }
  canvas.legend(legend);
  return { figureId: "fig10", fileName: "fig10_reputation.svg", svg: canvas.render() };
}

// -- registry ---------------------------------------------------------------------

export const FIGURES: Record<string, { experiment: string; description: string }> = {
  fig4: { experiment: "exp3", description: "DP accuracy/privacy tradeoff" },
  fig5: { experiment: "exp4", description: "selection success bars + latency line" },
  fig6: { experiment: "exp5", description: "Sybil correctness degradation" },
  fig7: { experiment: "exp6", description: "non-IID sensitivity" },
  fig8: { experiment: "exp1", description: "aggregator robustness" },
  fig9: { experiment: "exp7", description: "infrastructure scalability" },
  fig10: { experiment: "exp10", description: "reputation trajectories" },
};

export function renderFigure(figureId: string, root: string): FigureResult | null {
  const spec = FIGURES[figureId];
  if (!spec) throw new Error(`unknown figure id "${figureId}"`);
  const runs = loadExperiment(root, spec.experiment);
  if (figureId === "fig9") {
    const hasInfra = [
      path.join(root, "exp7", "infrastructure.json"),
      path.join(root, "infrastructure.json"),
    ].some((p) => fs.existsSync(p));
    if (!hasInfra && !runs) return null;
    return renderFig9(runs ?? { expId: "exp7", title: "", arms: new Map() }, root);
  }
  if (!runs) return null;
  switch (figureId) {
    case "fig4": return renderFig4(runs);
    case "fig5": return renderFig5(runs);
    case "fig6": return renderFig6(runs);
    case "fig7": return renderFig7(runs);
    case "fig8": return renderFig8(runs);
    case "fig10": return renderFig10(runs);
    default: return null;
  }
}
