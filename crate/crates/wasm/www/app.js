import init, { example_names, example_source, check, separate, sample } from "./pkg/qrange_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

let lastCloud = null;
let lastWitness = null;

function status(html, isError = false) {
  $("status").innerHTML = html;
  $("status").className = isError ? "err" : "";
}

function guard(fn) {
  return () => {
    try {
      fn();
    } catch (e) {
      status(String(e), true);
    }
  };
}

function loadExample() {
  $("problem").value = example_source($("example").value);
  lastCloud = null;
  lastWitness = null;
  $("detail").textContent = "";
  status("");
  draw();
}

function runCheck() {
  const cert = JSON.parse(check($("problem").value));
  lastWitness = cert.witness ?? null;
  let line = `<span class="verdict">${cert.verdict}</span>`;
  if (cert.lambda !== undefined) line += ` &nbsp; &lambda; = ${cert.lambda.toPrecision(6)}`;
  if (cert.levels) line += ` &nbsp; levels (${cert.levels.map((x) => x.toPrecision(6)).join(", ")})`;
  if (cert.verification) line += ` &nbsp; witness ${cert.verification.valid ? "verified" : "FAILED"}`;
  status(line);
  const trace = cert.path.map((s) => `${s.step}: ${s.condition} -> ${s.outcome}`).join("\n");
  $("detail").textContent = trace + (lastWitness ? `\n\nwitness ${JSON.stringify(lastWitness, null, 1)}` : "");
  draw();
}

function runSample() {
  const t0 = performance.now();
  lastCloud = JSON.parse(sample($("problem").value, num("box"), num("count"), num("seed"), num("resolution"), 2.0));
  const ms = (performance.now() - t0).toFixed(0);
  let line;
  if (lastCloud.degenerate_cloud) {
    line = "sample cloud has no interior (range is a curve or a point)";
  } else {
    line = lastCloud.suspected_nonconvex
      ? `sampling suggests a hole (largest cluster ${lastCloud.largest_cluster} cells)`
      : "sampling shows no hole";
  }
  status(`${line} &nbsp; <small>${ms} ms</small>`);
  draw();
}

function runSeparate() {
  const r = JSON.parse(separate($("problem").value, num("alpha"), num("beta")));
  status(`g separates f: <b>${r.g_separates_f}</b> &nbsp; f separates g: <b>${r.f_separates_g}</b>`);
  $("detail").textContent = JSON.stringify(r, null, 1);
}

function bounds() {
  const xs = [];
  const ys = [];
  if (lastCloud) {
    const p = lastCloud.points;
    for (let i = 0; i < p.length; i += 2) {
      xs.push(p[i]);
      ys.push(p[i + 1]);
    }
  }
  if (lastWitness) {
    for (const q of [lastWitness.M, lastWitness.N, lastWitness.K]) {
      xs.push(q[0]);
      ys.push(q[1]);
    }
  }
  if (xs.length === 0) return null;
  // Robust extent: ignore the sparse outer tails so the picture stays legible.
  const sorted = (a) => Float64Array.from(a).sort();
  const sx = sorted(xs);
  const sy = sorted(ys);
  const q = (s, t) => s[Math.min(s.length - 1, Math.floor(t * (s.length - 1)))];
  let [x0, x1, y0, y1] = [q(sx, 0.01), q(sx, 0.99), q(sy, 0.01), q(sy, 0.99)];
  if (lastWitness) {
    for (const p of [lastWitness.M, lastWitness.N, lastWitness.K]) {
      x0 = Math.min(x0, p[0]);
      x1 = Math.max(x1, p[0]);
      y0 = Math.min(y0, p[1]);
      y1 = Math.max(y1, p[1]);
    }
  }
  const padX = (x1 - x0 || 1) * 0.08;
  const padY = (y1 - y0 || 1) * 0.08;
  return [x0 - padX, x1 + padX, y0 - padY, y1 + padY];
}

function draw() {
  const c = $("plot");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const b = bounds();
  if (!b) return;
  const [x0, x1, y0, y1] = b;
  const X = (x) => ((x - x0) / (x1 - x0)) * c.width;
  const Y = (y) => c.height - ((y - y0) / (y1 - y0)) * c.height;

  ctx.strokeStyle = "#ddd";
  ctx.beginPath();
  if (x0 < 0 && x1 > 0) { ctx.moveTo(X(0), 0); ctx.lineTo(X(0), c.height); }
  if (y0 < 0 && y1 > 0) { ctx.moveTo(0, Y(0)); ctx.lineTo(c.width, Y(0)); }
  ctx.stroke();

  if (lastCloud) {
    ctx.fillStyle = "rgba(58,110,165,0.35)";
    const p = lastCloud.points;
    for (let i = 0; i < p.length; i += 2) ctx.fillRect(X(p[i]) - 0.75, Y(p[i + 1]) - 0.75, 1.5, 1.5);

    ctx.fillStyle = "rgba(221,51,51,0.8)";
    for (const h of lastCloud.hole_cells) ctx.fillRect(X(h[0]) - 2, Y(h[1]) - 2, 4, 4);

    if (lastCloud.hull.length > 1) {
      ctx.strokeStyle = "#444";
      ctx.beginPath();
      lastCloud.hull.forEach((h, i) => (i ? ctx.lineTo(X(h[0]), Y(h[1])) : ctx.moveTo(X(h[0]), Y(h[1]))));
      ctx.closePath();
      ctx.stroke();
    }
  }

  if (lastWitness) {
    const { M, N, K } = lastWitness;
    ctx.strokeStyle = "#e69500";
    ctx.setLineDash([5, 4]);
    ctx.beginPath();
    ctx.moveTo(X(M[0]), Y(M[1]));
    ctx.lineTo(X(N[0]), Y(N[1]));
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#e69500";
    ctx.font = "13px sans-serif";
    for (const [name, q] of [["M", M], ["N", N], ["K", K]]) {
      ctx.beginPath();
      ctx.arc(X(q[0]), Y(q[1]), name === "K" ? 5 : 4, 0, 2 * Math.PI);
      name === "K" ? ctx.stroke() : ctx.fill();
      ctx.fillText(name, X(q[0]) + 7, Y(q[1]) - 7);
    }
  }
}

await init();
for (const name of example_names()) {
  const opt = document.createElement("option");
  opt.value = opt.textContent = name;
  $("example").appendChild(opt);
}
$("example").addEventListener("change", loadExample);
$("check").addEventListener("click", guard(runCheck));
$("sample").addEventListener("click", guard(runSample));
$("separate").addEventListener("click", guard(runSeparate));
loadExample();
