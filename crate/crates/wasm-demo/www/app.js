import init, {
  demo_face,
  rgba_to_gray,
  haar_response,
  compare_dynamics,
  synth_confusion,
  seed_from_text,
} from "./pkg/facedyn_wasm.js";

const $ = (id) => document.getElementById(id);

// ----- panel 1: Haar feature explorer ---------------------------------

const haar = {
  gray: null,
  width: 0,
  height: 0,
  response: null,
  hover: null,
};

function setHaarImage(gray, width, height) {
  haar.gray = gray;
  haar.width = width;
  haar.height = height;
  refreshHaar();
}

function refreshHaar() {
  if (!haar.gray) return;
  const kind = Number($("haar-kind").value);
  const scale = Number($("haar-scale").value);
  $("haar-scale-out").textContent = scale.toFixed(2);
  try {
    haar.response = JSON.parse(
      haar_response(haar.gray, haar.width, haar.height, kind, scale, 0.1)
    );
  } catch (e) {
    $("haar-readout").textContent = `error: ${e}`;
    return;
  }
  drawHaar();
}

function heatColor(t) {
  // blue (negative) -> dark (zero) -> orange (positive)
  const clamped = Math.max(-1, Math.min(1, t));
  if (clamped < 0) {
    const a = -clamped;
    return `rgba(${40 + 30 * a}, ${120 + 80 * a}, 255, ${0.35 + 0.6 * a})`;
  }
  const a = clamped;
  return `rgba(255, ${170 - 90 * a}, ${60 - 40 * a}, ${0.35 + 0.6 * a})`;
}

function drawHaar() {
  const canvas = $("haar-canvas");
  const ctx = canvas.getContext("2d");
  const { width, height } = haar;
  const sx = canvas.width / width;
  const sy = canvas.height / height;

  const imageData = ctx.createImageData(width, height);
  for (let i = 0; i < width * height; i++) {
    const v = haar.gray[i];
    imageData.data[4 * i] = v;
    imageData.data[4 * i + 1] = v;
    imageData.data[4 * i + 2] = v;
    imageData.data[4 * i + 3] = 255;
  }
  const off = new OffscreenCanvas(width, height);
  off.getContext("2d").putImageData(imageData, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);

  const r = haar.response;
  if (!r) return;
  const span = Math.max(Math.abs(r.min_value), Math.abs(r.max_value), 1e-12);
  for (const p of r.points) {
    ctx.beginPath();
    ctx.arc(p.x * sx, p.y * sy, Math.max(3, 0.022 * canvas.width), 0, 2 * Math.PI);
    ctx.fillStyle = p.degenerate ? "rgba(128,128,128,0.5)" : heatColor(p.value / span);
    ctx.fill();
  }
  if (haar.hover) {
    const [wx, wy, ww, wh] = haar.hover.window;
    ctx.strokeStyle = "#58a6ff";
    ctx.lineWidth = 2;
    ctx.strokeRect(wx * sx, wy * sy, ww * sx, wh * sy);
  }
}

$("haar-canvas").addEventListener("mousemove", (ev) => {
  if (!haar.response) return;
  const rect = ev.target.getBoundingClientRect();
  const px = ((ev.clientX - rect.left) / rect.width) * haar.width;
  const py = ((ev.clientY - rect.top) / rect.height) * haar.height;
  let best = null;
  let bestDist = Infinity;
  for (const p of haar.response.points) {
    const d = (p.x - px) ** 2 + (p.y - py) ** 2;
    if (d < bestDist) {
      bestDist = d;
      best = p;
    }
  }
  haar.hover = best;
  $("haar-readout").textContent = best
    ? `point (${best.x}, ${best.y}) · window ${best.window[2]}×${best.window[3]} at (${best.window[0]}, ${best.window[1]}) · value ${best.degenerate ? "degenerate → 0" : best.value.toFixed(3)}`
    : "";
  drawHaar();
});

$("haar-kind").addEventListener("change", refreshHaar);
$("haar-scale").addEventListener("input", refreshHaar);
$("haar-reset").addEventListener("click", () => {
  const size = 120;
  setHaarImage(demo_face(size), size, size);
});
$("haar-file").addEventListener("change", async (ev) => {
  const file = ev.target.files[0];
  if (!file) return;
  const bitmap = await createImageBitmap(file);
  const maxSide = 220;
  const ratio = Math.min(1, maxSide / Math.max(bitmap.width, bitmap.height));
  const w = Math.max(32, Math.round(bitmap.width * ratio));
  const h = Math.max(32, Math.round(bitmap.height * ratio));
  const off = new OffscreenCanvas(w, h);
  const ctx = off.getContext("2d");
  ctx.drawImage(bitmap, 0, 0, w, h);
  const data = ctx.getImageData(0, 0, w, h);
  setHaarImage(rgba_to_gray(new Uint8Array(data.data.buffer), w, h), w, h);
});

// ----- panel 2: dynamics similarity ------------------------------------

let ltiSeeds = { a: 1, b: 2 };

function refreshLti() {
  const rhoA = Number($("rho-a").value);
  const thetaA = Number($("theta-a").value);
  const rhoB = Number($("rho-b").value);
  const thetaB = Number($("theta-b").value);
  const t = Number($("lti-t").value);
  const noise = Number($("lti-noise").value);
  $("rho-a-out").textContent = rhoA.toFixed(3);
  $("theta-a-out").textContent = thetaA.toFixed(2);
  $("rho-b-out").textContent = rhoB.toFixed(3);
  $("theta-b-out").textContent = thetaB.toFixed(2);
  $("lti-t-out").textContent = t;
  $("lti-noise-out").textContent = noise.toFixed(2);

  let result;
  try {
    result = JSON.parse(
      compare_dynamics(rhoA, thetaA, rhoB, thetaB, 7, ltiSeeds.a, ltiSeeds.b, t, noise)
    );
  } catch (e) {
    $("lti-sim").textContent = `error: ${e}`;
    return;
  }
  $("lti-sim").textContent = result.similarity.toFixed(4);
  $("lti-dtw").textContent = result.dtw_distance.toFixed(2);
  drawCurves(result);
}

function drawCurves(result) {
  const canvas = $("lti-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const all = [...result.ya.flat(), ...result.yb.flat()];
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const pad = 0.08 * (hi - lo || 1);
  const yOf = (v) =>
    canvas.height - ((v - lo + pad) / (hi - lo + 2 * pad)) * canvas.height;
  const xOf = (k, n) => (k / Math.max(1, n - 1)) * (canvas.width - 8) + 4;
  ctx.lineWidth = 1.6;
  const palette = {
    ya: ["#58a6ff", "#1f6feb"],
    yb: ["#f0883e", "#d29922"],
  };
  for (const [key, curves] of [["ya", result.ya], ["yb", result.yb]]) {
    curves.forEach((curve, d) => {
      ctx.strokeStyle = palette[key][d % 2];
      ctx.beginPath();
      curve.forEach((v, k) => {
        const x = xOf(k, curve.length);
        const y = yOf(v);
        if (k === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    });
  }
  ctx.fillStyle = "#8b98a5";
  ctx.font = "11px system-ui";
  ctx.fillText("system A (blues) · system B (oranges), two output channels each", 8, 14);
}

for (const id of ["rho-a", "theta-a", "rho-b", "theta-b", "lti-t", "lti-noise"]) {
  $(id).addEventListener("input", refreshLti);
}
$("copy-ab").addEventListener("click", () => {
  $("rho-b").value = $("rho-a").value;
  $("theta-b").value = $("theta-a").value;
  refreshLti();
});
$("lti-reseed").addEventListener("click", () => {
  ltiSeeds = {
    a: Math.floor(Math.random() * 1e6),
    b: Math.floor(Math.random() * 1e6),
  };
  refreshLti();
});

// ----- panel 3: synthetic benchmark -------------------------------------

function runBench() {
  const seedText = $("bench-seed").value || "42";
  const seed = /^\d+$/.test(seedText) ? Number(seedText) >>> 0 : seed_from_text(seedText);
  const noise = Number($("bench-noise").value);
  const seqs = Number($("bench-seqs").value);
  $("bench-noise-out").textContent = noise.toFixed(2);
  $("bench-seqs-out").textContent = seqs;
  let result;
  try {
    result = JSON.parse(synth_confusion(seed, noise, seqs, 18));
  } catch (e) {
    $("bench-hankel").textContent = `error: ${e}`;
    return;
  }
  $("bench-hankel").textContent = `${result.hankel_accuracy.toFixed(1)}%`;
  $("bench-dtw").textContent = `${result.dtw_accuracy.toFixed(1)}%`;

  const rows = result.confusion;
  const labels = result.labels;
  let html = "<table class='confusion'><tr><th>true \\ predicted</th>";
  for (const l of labels) html += `<th>${l}</th>`;
  html += "</tr>";
  rows.forEach((row, r) => {
    html += `<tr><th>${labels[r]}</th>`;
    const total = row.reduce((a, b) => a + b, 0) || 1;
    row.forEach((n, c) => {
      const share = n / total;
      const bg =
        r === c
          ? `rgba(63,185,80,${0.15 + 0.55 * share})`
          : `rgba(248,81,73,${n === 0 ? 0 : 0.15 + 0.55 * share})`;
      html += `<td style="background:${bg}">${n}</td>`;
    });
    html += "</tr>";
  });
  html += "</table>";
  $("bench-confusion").innerHTML = html;
}

$("bench-run").addEventListener("click", runBench);
$("bench-noise").addEventListener("input", () =>
  ($("bench-noise-out").textContent = Number($("bench-noise").value).toFixed(2))
);
$("bench-seqs").addEventListener("input", () =>
  ($("bench-seqs-out").textContent = $("bench-seqs").value)
);

// ----- boot --------------------------------------------------------------

init().then(() => {
  const size = 120;
  setHaarImage(demo_face(size), size, size);
  refreshLti();
  runBench();
});
