import init, { lookaheadCurve, trajectory, gapGrowth } from "./pkg/schedsim_web.js";

const $ = (id) => document.getElementById(id);

function worldParams() {
  const p = {};
  for (const el of $("world").querySelectorAll("input, select")) {
    if (el.value === "") continue;
    p[el.name] = el.type === "number" ? Number(el.value) : el.value;
  }
  return p;
}

function call(fn, params, status) {
  const t0 = performance.now();
  try {
    const out = JSON.parse(fn(JSON.stringify(params)));
    $(status).textContent = `${Math.round(performance.now() - t0)} ms`;
    return out;
  } catch (e) {
    $(status).textContent = `error: ${e.message ?? e}`;
    return null;
  }
}

// series: [{ xs, ys, color, bars?, errs? }]
function plot(canvas, series, xlabel, ylabel) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 70, R = 15, T = 15, B = 40;
  ctx.clearRect(0, 0, W, H);
  const xs = series.flatMap((s) => s.xs);
  const ys = series.flatMap((s) => s.ys.map((y, i) => [y - (s.errs?.[i] ?? 0), y + (s.errs?.[i] ?? 0)]).flat());
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (series.some((s) => s.bars)) { x0 -= 0.5; x1 += 0.5; y0 = Math.min(0, y0); }
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const pad = 0.05 * (y1 - y0);
  y0 -= pad; y1 += pad;
  const sx = (x) => L + ((x - x0) / (x1 - x0)) * (W - L - R);
  const sy = (y) => H - B - ((y - y0) / (y1 - y0)) * (H - T - B);

  ctx.strokeStyle = "#888"; ctx.fillStyle = "#444"; ctx.font = "11px sans-serif";
  ctx.beginPath(); ctx.moveTo(L, T); ctx.lineTo(L, H - B); ctx.lineTo(W - R, H - B); ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const y = y0 + (i / 4) * (y1 - y0);
    ctx.fillText(y.toPrecision(4), 4, sy(y) + 4);
  }
  const step = Math.max(1, Math.ceil((x1 - x0) / 13));
  for (let x = Math.ceil(x0); x <= x1; x += step) ctx.fillText(String(x), sx(x) - 4, H - B + 14);
  ctx.fillText(xlabel, W / 2, H - 6);
  ctx.save(); ctx.translate(12, T + 60); ctx.rotate(-Math.PI / 2); ctx.fillText(ylabel, -40, 0); ctx.restore();

  for (const s of series) {
    ctx.strokeStyle = s.color; ctx.fillStyle = s.color;
    if (s.bars) {
      const w = (sx(1) - sx(0)) * 0.8;
      s.xs.forEach((x, i) => ctx.fillRect(sx(x) - w / 2, sy(s.ys[i]), w, sy(y0 < 0 ? 0 : y0) - sy(s.ys[i])));
      continue;
    }
    ctx.beginPath();
    s.xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(s.ys[i])) : ctx.moveTo(sx(x), sy(s.ys[i]))));
    ctx.stroke();
    s.xs.forEach((x, i) => {
      ctx.beginPath(); ctx.arc(sx(x), sy(s.ys[i]), 2.5, 0, 2 * Math.PI); ctx.fill();
      const e = s.errs?.[i];
      if (e) { ctx.beginPath(); ctx.moveTo(sx(x), sy(s.ys[i] - e)); ctx.lineTo(sx(x), sy(s.ys[i] + e)); ctx.stroke(); }
    });
  }
}

function runCurve() {
  const out = call(lookaheadCurve, { ...worldParams(), n_seeds: Number($("n_seeds").value) }, "curve-status");
  if (!out) return;
  $("curve-status").textContent += `, weekly income ${out.weekly_income.toFixed(0)}`;
  plot($("curve"), [{ xs: out.lookaheads, ys: out.mean_utility, errs: out.std_error, color: "#2471a3" }],
    "lookahead (weeks)", "mean total utility");
}

function runTrajectory() {
  const params = worldParams();
  const slider = $("lookahead");
  slider.max = params.horizon ?? 26;
  $("lookahead-value").textContent = slider.value;
  const out = call(trajectory, { ...params, lookahead: Number(slider.value) }, "traj-status");
  if (!out) return;
  const weeks = out.income.map((_, i) => i);
  $("traj-status").textContent +=
    `, utility τ = 0: ${out.blind.total_utility.toFixed(2)}, τ = ${slider.value}: ${out.sighted.total_utility.toFixed(2)}`;
  plot($("traj"), [
    { xs: weeks, ys: out.income, color: "#bbb", bars: true },
    { xs: weeks, ys: out.blind.consumption, color: "#c0392b" },
    { xs: weeks, ys: out.sighted.consumption, color: "#2471a3" },
  ], "week", "dollars");
}

function runGap() {
  const ks = $("ks").value.split(/[\s,]+/).filter(Boolean).map(Number);
  const out = call(gapGrowth, { ks, trials: Number($("trials").value), policy: $("policy").value }, "gap-status");
  if (!out) return;
  $("gap-status").textContent += `, slope ${out.fit.slope.toPrecision(3)}, R² ${out.fit.r_squared.toFixed(4)}`;
  plot($("gap"), [{ xs: out.ks, ys: out.gap_mean, errs: out.std_error, color: "#117a65" }], "k", "mean utility gap");
}

await init();
$("run-curve").addEventListener("click", runCurve);
$("lookahead").addEventListener("input", runTrajectory);
$("world").addEventListener("change", runTrajectory);
$("run-gap").addEventListener("click", runGap);
runTrajectory();
runCurve();
