// Expects the wasm-bindgen output (target "web") in ./pkg.
import init, { Explorer } from "./pkg/srx_web.js";

const $ = (id) => document.getElementById(id);
let ex;

function fmt(v) {
  if (v === null || v === undefined) return "--";
  if (typeof v === "number") return Number.isInteger(v) ? String(v) : v.toFixed(4);
  if (Array.isArray(v)) return "[" + v.map(fmt).join(", ") + "]";
  return String(v);
}

function table(res, highlight = new Set()) {
  const t = document.createElement("table");
  const head = t.createTHead().insertRow();
  for (const c of res.columns) {
    const th = document.createElement("th");
    th.textContent = c;
    head.appendChild(th);
  }
  const body = t.createTBody();
  for (const r of res.rows) {
    const tr = body.insertRow();
    if (highlight.has(r.id)) tr.className = "front";
    for (const c of res.columns) tr.insertCell().textContent = fmt(r[c]);
  }
  return t;
}

function show(el, res) {
  el.replaceChildren();
  if (res.error) {
    const pre = document.createElement("pre");
    pre.className = "error";
    pre.textContent = res.position == null ? res.error : `${$("cmd").value}\n${" ".repeat(res.position)}^\n${res.error}`;
    el.appendChild(pre);
  } else if (res.columns) {
    el.appendChild(table(res));
  } else if (res.kind === "report") {
    const pre = document.createElement("pre");
    pre.textContent = JSON.stringify(res.report, null, 2);
    el.appendChild(pre);
  } else {
    const pre = document.createElement("pre");
    pre.textContent = res.kind === "count" ? String(res.count) : res.message;
    el.appendChild(pre);
  }
}

function runCommand(ev) {
  ev?.preventDefault();
  show($("cmd-out"), JSON.parse(ex.run($("cmd").value)));
  refresh();
}

function drawPareto() {
  const by = $("pareto-by").value;
  const front = JSON.parse(ex.pareto(by));
  const all = JSON.parse(ex.run("top 100000"));
  const canvas = $("pareto");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (front.error || all.error) {
    $("pareto-out").replaceChildren();
    show($("pareto-out"), front.error ? front : all);
    return;
  }
  const score = (r) => (by === "dl" ? r.dl : r.fitness);
  const pts = all.rows.filter((r) => score(r) !== null && Number.isFinite(score(r)));
  if (pts.length === 0) return;
  const onFront = new Set(front.rows.map((r) => r.id));
  const pad = 36;
  const xs = pts.map((r) => r.size), ys = pts.map(score);
  const [x0, x1] = [Math.min(...xs) - 0.5, Math.max(...xs) + 0.5];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (canvas.width - 2 * pad);
  const py = (y) => canvas.height - pad - ((y - y0) / (y1 - y0)) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText("size", canvas.width / 2, canvas.height - 8);
  ctx.fillText(by, 4, pad - 8);
  for (const r of pts) {
    ctx.fillStyle = onFront.has(r.id) ? "#d33" : "#8aa";
    ctx.beginPath();
    ctx.arc(px(r.size), py(score(r)), onFront.has(r.id) ? 4 : 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  const sorted = front.rows.slice().sort((a, b) => a.size - b.size);
  ctx.strokeStyle = "#d33";
  ctx.beginPath();
  sorted.forEach((r, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, px(r.size), py(score(r))));
  ctx.stroke();
  $("pareto-out").replaceChildren(table(front, onFront));
}

function drawDistribution() {
  const size = Number($("dist-size").value);
  $("dist-size-v").textContent = size;
  const res = JSON.parse(ex.distribution(size, $("dist-fit").checked, 15));
  const el = $("dist-out");
  if (res.error) return show(el, res);
  const t = table(res);
  const max = Math.max(1, ...res.rows.map((r) => r.count));
  t.querySelectorAll("tbody tr").forEach((tr, i) => {
    const bar = document.createElement("span");
    bar.className = "bar";
    bar.style.width = `${(6 * res.rows[i].count) / max}rem`;
    tr.insertCell().appendChild(bar);
  });
  el.replaceChildren(t);
}

function refresh() {
  drawPareto();
  drawDistribution();
  $("status").textContent = `${ex.model_count()} models, ${ex.loss()} loss`;
}

async function readFile(input) {
  const f = input.files[0];
  return f ? await f.text() : null;
}

async function main() {
  await init();
  ex = Explorer.demo();
  $("cmd-form").addEventListener("submit", runCommand);
  $("pareto-by").addEventListener("change", drawPareto);
  $("dist-size").addEventListener("input", drawDistribution);
  $("dist-fit").addEventListener("change", drawDistribution);
  $("data-file").addEventListener("change", async (e) => {
    const text = await readFile(e.target);
    if (text !== null) show($("cmd-out"), JSON.parse(ex.load_dataset(text)));
  });
  $("models-file").addEventListener("change", async (e) => {
    const text = await readFile(e.target);
    if (text !== null) show($("cmd-out"), JSON.parse(ex.import_models(text, false)));
    refresh();
  });
  runCommand();
}

main();
