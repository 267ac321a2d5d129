import init, { rotation_current, self_trapping, conditional_current, version } from "./pkg/homodyne_demo.js";

function draw(canvas, t, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);

  let lo = Infinity, hi = -Infinity;
  for (const { y } of series) for (const v of y) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (!(hi > lo)) { lo -= 1; hi += 1; }
  const t0 = t[0], t1 = t[t.length - 1];
  const x = (v) => pad + ((v - t0) / (t1 - t0)) * (w - 2 * pad);
  const y = (v) => h - pad / 2 - ((v - lo) / (hi - lo)) * (h - pad);

  ctx.strokeStyle = "#bbb";
  ctx.strokeRect(pad, pad / 2, w - 2 * pad, h - pad);
  ctx.fillStyle = "#555";
  ctx.font = "12px sans-serif";
  ctx.fillText(hi.toPrecision(3), 2, pad / 2 + 10);
  ctx.fillText(lo.toPrecision(3), 2, h - pad / 2);
  ctx.fillText(t0.toPrecision(3), pad, h - 4);
  ctx.fillText(t1.toPrecision(3), w - pad - 30, h - 4);

  for (const { y: ys, color } of series) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    ys.forEach((v, i) => (i ? ctx.lineTo(x(t[i]), y(v)) : ctx.moveTo(x(t[i]), y(v))));
    ctx.stroke();
  }
}

function wire(id, run) {
  const root = document.getElementById(id);
  const summary = root.querySelector(".summary");
  const canvas = root.querySelector("canvas");
  const value = (name) => Number(root.querySelector(`[name=${name}]`).value);
  const go = () => {
    summary.classList.remove("error");
    try {
      const curve = run(value);
      const series = [{ y: curve.y, color: "#1565c0" }];
      const ref = curve.reference;
      if (ref.length) series.unshift({ y: ref, color: "#999" });
      draw(canvas, curve.t, series);
      summary.textContent = curve.summary;
      curve.free();
    } catch (e) {
      summary.classList.add("error");
      summary.textContent = String(e.message ?? e);
    }
  };
  root.querySelector("button").addEventListener("click", go);
  go();
}

await init();
document.querySelector("footer").textContent = `homodyne ${version()}`;
wire("rotation", (v) => rotation_current(v("jy0"), v("t_end")));
wire("trapping", (v) => self_trapping(v("knw"), v("ek"), v("imbalance")));
wire("trajectory", (v) => conditional_current(v("n"), v("gamma"), v("seed")));
