import init, { fixedOutline, legalize, minArea } from "./pkg/mixfloor_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const buttons = ["run-fixed", "run-legalize", "run-minarea"].map($);

function text() {
  return [$("blocks").value, $("nets").value, $("pl").value];
}

function status(msg, error = false) {
  $("status").textContent = msg;
  $("status").className = error ? "error" : "";
}

function plan(title, svg) {
  const fig = document.createElement("figure");
  fig.innerHTML = svg + `<figcaption>${title}</figcaption>`;
  return fig;
}

function show(summary, plans) {
  $("summary").innerHTML = summary;
  $("plans").replaceChildren(...plans.map(([t, s]) => plan(t, s)));
}

const fmt = (v, d = 0) => (Number.isFinite(v) ? v.toFixed(d) : "-");

// yield to the browser so the status line paints before the solver blocks
function run(label, job) {
  buttons.forEach((b) => (b.disabled = true));
  status(label + "...");
  setTimeout(() => {
    const t = performance.now();
    try {
      job();
      status(`${label}: ${((performance.now() - t) / 1000).toFixed(1)} s`);
    } catch (e) {
      status(String(e.message ?? e), true);
    }
    buttons.forEach((b) => (b.disabled = false));
  }, 20);
}

$("run-fixed").onclick = () =>
  run("fixed outline", () => {
    const r = JSON.parse(
      fixedOutline(...text(), num("modules"), num("ratio"), num("gamma"), num("seed"), num("generations")),
    );
    const first = r.history.findIndex((g) => g.legal);
    show(
      `<p>${r.modules} modules in ${fmt(r.outline[0], 1)} x ${fmt(r.outline[1], 1)}:
       ${r.legal ? "legal" : "<b>not legal</b>"}, HPWL ${fmt(r.hpwl)},
       ${r.generations} generations${first >= 0 ? `, first legal at ${first + 1}` : ""}.</p>`,
      [["best plan", r.svg]],
    );
  });

$("run-legalize").onclick = () =>
  run("legalize", () => {
    const r = JSON.parse(legalize(...text(), num("modules"), num("ratio"), num("gamma"), num("seed")));
    const row = (name, s) =>
      `<tr><th>${name}</th><td>${s.overlapping_pairs}</td><td>${fmt(s.max_outside, 1)}</td>
       <td>${fmt(s.area)}</td><td>${s.legal ? "yes" : "no"}</td></tr>`;
    show(
      `<table><tr><th></th><th>overlapping pairs</th><th>max outside</th><th>bbox area</th><th>legal</th></tr>
       ${row("random drop", r.before)}${row("graph packing", r.packed)}${row("with repair", r.repaired)}</table>`,
      [
        ["random drop", r.before.svg],
        ["graph packing", r.packed.svg],
        ["with repair", r.repaired.svg],
      ],
    );
  });

$("run-minarea").onclick = () =>
  run("minimum area", () => {
    const r = JSON.parse(minArea(...text(), num("modules"), num("seed"), num("generations")));
    const rows = r.trials
      .map((t, i) => `<tr><td>${i}</td><td>${t.gamma.toFixed(4)}</td><td>${t.feasible ? "yes" : "no"}</td>
                      <td>${fmt(t.hpwl)}</td><td>${fmt(t.area)}</td></tr>`)
      .join("");
    show(
      `<p>whitespace bracket [${r.gamma_min.toFixed(4)}, ${r.gamma_max.toFixed(4)}], achieved
       ${(100 * r.whitespace).toFixed(2)}%, HPWL ${fmt(r.hpwl)}, area ${fmt(r.area)}.</p>
       <table><tr><th>trial</th><th>&gamma;</th><th>legal</th><th>HPWL</th><th>area</th></tr>${rows}</table>`,
      [["smallest legal outline", r.svg]],
    );
  });

init().then(
  () => status("ready"),
  (e) => status("failed to load wasm: " + e, true),
);
