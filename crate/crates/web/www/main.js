import init, { solve_config, mode_decay, kernel_pair } from "./pkg/caputo_web.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const pad = 30;
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  ctx.fillText(y1.toPrecision(3), 2, pad);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function runSolve() {
  $("solve-err").textContent = "";
  try {
    const out = solve_config($("ini").value);
    const n = out.length / 2;
    plot($("profile"), [{ x: Array.from(out.slice(0, n)), y: Array.from(out.slice(n)), color: "#1f77b4" }]);
  } catch (e) {
    $("solve-err").textContent = String(e);
  }
}

function runDecay() {
  $("decay-err").textContent = "";
  try {
    const out = mode_decay(Number($("alpha").value), 63, 64);
    const t = [], u = [], e = [];
    for (let i = 0; i < out.length; i += 3) {
      t.push(out[i]); u.push(out[i + 1]); e.push(out[i + 2]);
    }
    plot($("modes"), [
      { x: t, y: e, color: "#d62728" },
      { x: t, y: u, color: "#1f77b4", dash: [6, 4] },
    ]);
  } catch (err) {
    $("decay-err").textContent = String(err);
  }
}

function runKernel() {
  try {
    const [c, r] = kernel_pair(Number($("k-alpha").value), Number($("k-t").value), Number($("k-xi").value));
    $("kernel-out").textContent =
      `contour    ${c.toExponential(15)}\nreal axis  ${r.toExponential(15)}\n|diff|     ${Math.abs(c - r).toExponential(2)}`;
  } catch (e) {
    $("kernel-out").textContent = String(e);
  }
}

await init();
$("solve").onclick = runSolve;
$("decay").onclick = runDecay;
$("kernel").onclick = runKernel;
runSolve();
runDecay();
runKernel();
