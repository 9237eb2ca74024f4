import init, { render_preview, brdf_lobe, dcrf_denoise } from "./pkg/svbrdf_web.js";

const PREVIEW_SIZE = 128;
const DCRF_SIZE = 32;

const $ = (id) => document.getElementById(id);
const value = (id) => parseFloat($(id).value);

function blit(canvas, rgba, width, height) {
  const off = new OffscreenCanvas(width, height);
  off.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), width, height), 0, 0);
  const ctx = canvas.getContext("2d");
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

let light = [0.25, 0.2];

function drawPreview() {
  const rgba = render_preview(PREVIEW_SIZE, value("p-rough"), value("p-f0"), value("p-bump"), light[0], light[1]);
  blit($("preview"), rgba, PREVIEW_SIZE, PREVIEW_SIZE);
}

function drawLobe() {
  const canvas = $("lobe");
  const ctx = canvas.getContext("2d");
  const samples = 181;
  const lobe = brdf_lobe(value("l-rough"), value("l-f0"), value("l-angle"), samples);
  const peak = Math.max(...lobe, 1e-9);
  const cx = canvas.width / 2, cy = canvas.height - 10, radius = canvas.height - 20;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#444";
  ctx.beginPath();
  ctx.moveTo(10, cy);
  ctx.lineTo(canvas.width - 10, cy);
  ctx.stroke();
  const t = (value("l-angle") * Math.PI) / 180;
  ctx.strokeStyle = "#e0b040";
  ctx.beginPath();
  ctx.moveTo(cx - Math.sin(t) * radius, cy - Math.cos(t) * radius);
  ctx.lineTo(cx, cy);
  ctx.stroke();
  // Lobe radius is linear in the BRDF, normalized to the current peak.
  ctx.strokeStyle = "#6cf";
  ctx.beginPath();
  lobe.forEach((f, k) => {
    const a = ((k + 0.5) / samples - 0.5) * Math.PI;
    const r = (f / peak) * radius;
    const x = cx + Math.sin(a) * r, y = cy - Math.cos(a) * r;
    k === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#999";
  ctx.fillText(`peak ${peak.toPrecision(3)} / sr`, 10, 14);
}

let seed = 1n;

function drawDcrf() {
  const rgba = dcrf_denoise(DCRF_SIZE, value("d-noise"), value("d-smooth"), seed);
  blit($("dcrf"), rgba, 2 * DCRF_SIZE, DCRF_SIZE);
}

function bind(ids, draw) {
  for (const id of ids) {
    const input = $(id);
    const show = () => (input.nextElementSibling.value = input.value);
    show();
    input.addEventListener("input", () => {
      show();
      draw();
    });
  }
}

await init();

bind(["p-rough", "p-f0", "p-bump"], drawPreview);
bind(["l-rough", "l-f0", "l-angle"], drawLobe);
bind(["d-noise", "d-smooth"], drawDcrf);

const preview = $("preview");
const moveLight = (e) => {
  const box = preview.getBoundingClientRect();
  light = [((e.clientX - box.left) / box.width) * 2 - 1, 1 - ((e.clientY - box.top) / box.height) * 2];
  drawPreview();
};
preview.addEventListener("pointerdown", (e) => {
  preview.setPointerCapture(e.pointerId);
  moveLight(e);
});
preview.addEventListener("pointermove", (e) => {
  if (preview.hasPointerCapture(e.pointerId)) moveLight(e);
});
$("d-seed").addEventListener("click", () => {
  seed += 1n;
  drawDcrf();
});

drawPreview();
drawLobe();
drawDcrf();
