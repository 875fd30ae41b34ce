import init, { simulate_and_rank, noise_curve, fairness_tradeoff } from "./pkg/covrank_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function fail(out, e) {
  out.innerHTML = `<p class="err">${e}</p>`;
}

function table(rows, head) {
  const th = head.map((h) => `<th>${h}</th>`).join("");
  const tr = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table><tr>${th}</tr>${tr}</table>`;
}

const fmt = (v) => (v === undefined || v === null ? "-" : v.toFixed(3));

// Draws series of {x, y} points on shared axes, with an optional legend.
function plot(canvas, series, { xlabel, ylabel, lines = true }) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 50, R = 130, T = 15, B = 40;
  ctx.clearRect(0, 0, W, H);
  const pts = series.flatMap((s) => s.points);
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => p.x)), Math.max(...pts.map((p) => p.x))];
  let [y0, y1] = [Math.min(...pts.map((p) => p.y)), Math.max(...pts.map((p) => p.y))];
  if (x0 === x1) { x0 -= 1; x1 += 1; }
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const sx = (x) => L + ((x - x0) / (x1 - x0)) * (W - L - R);
  const sy = (y) => H - B - ((y - y0) / (y1 - y0)) * (H - T - B);

  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(L, T); ctx.lineTo(L, H - B); ctx.lineTo(W - R, H - B);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toPrecision(3), L, H - B + 14);
  ctx.fillText(x1.toPrecision(3), W - R - 30, H - B + 14);
  ctx.fillText(y1.toPrecision(3), 4, T + 8);
  ctx.fillText(y0.toPrecision(3), 4, H - B);
  ctx.fillText(xlabel, (W - R) / 2, H - 8);
  ctx.save();
  ctx.translate(12, H / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();

  series.forEach((s, k) => {
    const c = COLORS[k % COLORS.length];
    ctx.strokeStyle = c;
    ctx.fillStyle = c;
    if (lines) {
      ctx.beginPath();
      s.points.forEach((p, i) => (i ? ctx.lineTo(sx(p.x), sy(p.y)) : ctx.moveTo(sx(p.x), sy(p.y))));
      ctx.stroke();
    }
    s.points.forEach((p) => ctx.fillRect(sx(p.x) - 2, sy(p.y) - 2, 4, 4));
    ctx.fillText(s.label, W - R + 10, T + 14 * (k + 1));
  });
}

// Rescales scores to the range of the true skills for plotting.
function rescale(v, target) {
  const [a, b] = [Math.min(...v), Math.max(...v)];
  const [c, d] = [Math.min(...target), Math.max(...target)];
  return v.map((s) => (b > a ? c + ((s - a) / (b - a)) * (d - c) : c));
}

function runSimulate() {
  const out = $("s-out");
  try {
    const res = JSON.parse(simulate_and_rank(
      num("s-n"), num("s-p"), $("s-noise").value, num("s-level"), num("s-sigma"), num("s-seed"), $("s-algos").value,
    ));
    out.innerHTML = `<p>${res.n_comparisons} comparisons</p>` + table(
      res.runs.map((r) => [r.algo, fmt(r.kendall_tau), fmt(r.upset_fraction), r.error ?? ""]),
      ["algorithm", "Kendall tau", "upset fraction", "error"],
    );
    const truth = { label: "true skill", points: res.x.map((x, i) => ({ x, y: res.r_true[i] })) };
    const fits = res.runs.filter((r) => r.scores).map((r) => {
      const s = rescale(r.scores, res.r_true);
      return { label: r.algo, points: res.x.map((x, i) => ({ x, y: s[i] })) };
    });
    plot($("s-plot"), [truth, ...fits], { xlabel: "covariate x", ylabel: "score (rescaled)", lines: false });
  } catch (e) {
    fail(out, e);
  }
}

function runCurve() {
  const out = $("c-out");
  try {
    const pts = JSON.parse(noise_curve(
      num("c-n"), num("c-p"), $("c-noise").value, $("c-levels").value, num("c-seeds"), 0, $("c-algos").value,
    ));
    const byAlgo = new Map();
    for (const p of pts) {
      if (!byAlgo.has(p.algo)) byAlgo.set(p.algo, []);
      if (p.mean_tau !== null) byAlgo.get(p.algo).push({ x: p.level, y: p.mean_tau });
    }
    out.innerHTML = table(
      pts.map((p) => [p.algo, p.level, fmt(p.mean_tau), fmt(p.std_tau), p.failed]),
      ["algorithm", "level", "mean tau", "std", "failed"],
    );
    plot($("c-plot"), [...byAlgo].map(([label, points]) => ({ label, points })), {
      xlabel: "noise level", ylabel: "Kendall tau",
    });
  } catch (e) {
    fail(out, e);
  }
}

function runFair() {
  const out = $("f-out");
  try {
    const pts = JSON.parse(fairness_tradeoff(num("f-n"), num("f-p"), num("f-seed"), $("f-lambdas").value));
    out.innerHTML = table(
      pts.map((p) => [p.fair_lambda, fmt(p.upset_fraction), fmt(p.abs_corr)]),
      ["penalty", "upset fraction", "|corr(score, z)|"],
    );
    plot($("f-plot"), [{ label: "svdkfair", points: pts.map((p) => ({ x: p.abs_corr, y: p.upset_fraction })) }], {
      xlabel: "|corr(score, z)|", ylabel: "upset fraction",
    });
  } catch (e) {
    fail(out, e);
  }
}

await init();
$("s-run").onclick = runSimulate;
$("c-run").onclick = runCurve;
$("f-run").onclick = runFair;
runSimulate();
