/**
 * DOM dashboard. The tree is built once and mutated in place on every
 * store change: per-frame work only touches attributes, text and the
 * polyline point lists recomputed from the bounded ring buffers, so a
 * long 30 Hz session cannot grow memory.
 */

import type { ConsoleClient } from "./client.js";
import type { ConsoleStore } from "./store.js";

const AXES = ["x", "y", "z"] as const;
const SPARK_W = 220;
const SPARK_H = 48;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string): SVGElement {
  return document.createElementNS("http://www.w3.org/2000/svg", tag) as SVGElement;
}

function sparkline(parent: HTMLElement, label: string): SVGElement {
  const wrap = el("div", "spark");
  wrap.appendChild(el("div", "spark-label", label));
  const svg = svgEl("svg");
  svg.setAttribute("width", String(SPARK_W));
  svg.setAttribute("height", String(SPARK_H));
  svg.setAttribute("viewBox", `0 0 ${SPARK_W} ${SPARK_H}`);
  const line = svgEl("polyline");
  line.setAttribute("class", "spark-line");
  line.setAttribute("fill", "none");
  svg.appendChild(line);
  wrap.appendChild(svg);
  parent.appendChild(wrap);
  return line;
}

function polylinePoints(values: number[], max: number): string {
  if (values.length < 2) return "";
  const n = values.length;
  const pts: string[] = new Array(n);
  for (let i = 0; i < n; i++) {
    const x = (i / (n - 1)) * SPARK_W;
    const y = SPARK_H - Math.min(1, (values[i] ?? 0) / (max || 1)) * (SPARK_H - 2) - 1;
    pts[i] = `${x.toFixed(1)},${y.toFixed(1)}`;
  }
  return pts.join(" ");
}

export class Dashboard {
  private banner: HTMLElement;
  private killFaultBanner: HTMLElement;
  private safetyBadge: HTMLElement;
  private connBadge: HTMLElement;
  private forceReadout: HTMLElement;
  private bars: Record<string, { pos: HTMLElement; neg: HTMLElement; label: HTMLElement }> = {};
  private arrow: SVGElement;
  private leanLine: SVGElement;
  private tickLine: SVGElement;
  private trialInfo: HTMLElement;
  private gainInput: HTMLInputElement;
  private ackLine: HTMLElement;
  private buttons: Record<string, HTMLButtonElement> = {};
  private ratingForm: HTMLElement;
  private ratingInputs: Record<string, HTMLInputElement> = {};
  private ratingScaleKey = "";

  constructor(
    private readonly root: HTMLElement,
    private readonly store: ConsoleStore,
    private readonly client: ConsoleClient,
  ) {
    root.replaceChildren();

    this.banner = el("div", "banner hidden");
    this.banner.id = "stale-banner";
    root.appendChild(this.banner);
    this.killFaultBanner = el(
      "div", "banner fault hidden",
      "KILL SEND FAILED — use the hardware switch",
    );
    root.appendChild(this.killFaultBanner);

    const head = el("div", "row header");
    this.connBadge = el("span", "badge conn", "connecting");
    this.safetyBadge = el("span", "badge safety", "—");
    this.safetyBadge.id = "safety-badge";
    head.append(this.connBadge, this.safetyBadge);
    const kill = el("button", "kill-button", "KILL");
    kill.id = "kill-button";
    // pointer-down, not click: no release wait, no confirmation, no debounce
    kill.addEventListener("pointerdown", () => this.client.killPointerDown());
    head.appendChild(kill);
    this.buttons.kill = kill;
    root.appendChild(head);

    const forcePane = el("div", "pane force-pane");
    this.forceReadout = el("div", "force-readout", "|F| 0.00 N");
    forcePane.appendChild(this.forceReadout);
    for (const axis of AXES) {
      const row = el("div", "bar-row");
      row.appendChild(el("span", "bar-axis", axis));
      const track = el("div", "bar-track");
      const neg = el("div", "bar neg");
      const pos = el("div", "bar pos");
      track.append(neg, pos);
      row.appendChild(track);
      const label = el("span", "bar-value", "0.00");
      row.appendChild(label);
      forcePane.appendChild(row);
      this.bars[axis] = { pos, neg, label };
    }
    const arrowSvg = svgEl("svg");
    arrowSvg.setAttribute("width", "120");
    arrowSvg.setAttribute("height", "120");
    arrowSvg.setAttribute("viewBox", "-60 -60 120 120");
    arrowSvg.setAttribute("class", "force-arrow");
    const circle = svgEl("circle");
    circle.setAttribute("r", "55");
    circle.setAttribute("class", "arrow-ring");
    circle.setAttribute("fill", "none");
    this.arrow = svgEl("line");
    this.arrow.setAttribute("class", "arrow-line");
    this.arrow.setAttribute("x1", "0");
    this.arrow.setAttribute("y1", "0");
    arrowSvg.append(circle, this.arrow);
    forcePane.appendChild(arrowSvg);
    root.appendChild(forcePane);

    const sparks = el("div", "pane sparks");
    this.leanLine = sparkline(sparks, "head lean (m)");
    this.tickLine = sparkline(sparks, "tick latency (µs)");
    root.appendChild(sparks);

    const controls = el("div", "pane controls");
    for (const name of ["arm", "engage", "release", "rearm"] as const) {
      const b = el("button", "ctl", name);
      b.id = `btn-${name}`;
      b.addEventListener("click", () => void this.client.send({ cmd: name }));
      controls.appendChild(b);
      this.buttons[name] = b;
    }
    this.gainInput = el("input") as HTMLInputElement;
    this.gainInput.type = "number";
    this.gainInput.step = "0.05";
    this.gainInput.min = "0";
    this.gainInput.id = "gain-input";
    const gainBtn = el("button", "ctl", "set gain");
    gainBtn.id = "btn-set-gain";
    gainBtn.addEventListener("click", () =>
      void this.client.send({ cmd: "set_gain", value: Number(this.gainInput.value) }),
    );
    const trialBtn = el("button", "ctl", "start trial");
    trialBtn.id = "btn-start-trial";
    trialBtn.addEventListener("click", () => void this.client.send({ cmd: "start_trial" }));
    controls.append(this.gainInput, gainBtn, trialBtn);
    this.buttons.set_gain = gainBtn;
    this.buttons.start_trial = trialBtn;
    this.trialInfo = el("div", "trial-info", "trial — / phase idle");
    this.trialInfo.id = "trial-info";
    controls.appendChild(this.trialInfo);
    this.ackLine = el("div", "ack-line", "");
    this.ackLine.id = "ack-line";
    controls.appendChild(this.ackLine);
    root.appendChild(controls);

    this.ratingForm = el("div", "pane rating hidden");
    this.ratingForm.id = "rating-form";
    root.appendChild(this.ratingForm);

    this.store.subscribe(() => this.render());
    this.render();
  }

  /** Rebuild the rating inputs only when the server's scale metadata changes. */
  private syncRatingForm(): void {
    const scales = this.store.hello?.scales ?? {};
    const key = JSON.stringify(scales);
    if (key === this.ratingScaleKey) return;
    this.ratingScaleKey = key;
    this.ratingForm.replaceChildren();
    this.ratingInputs = {};
    this.ratingForm.appendChild(el("div", "rating-title", "rate the stimulus"));
    for (const [name, meta] of Object.entries(scales)) {
      const row = el("label", "rating-row", `${name} [${meta.min}..${meta.max}] `);
      const input = el("input") as HTMLInputElement;
      input.type = "number";
      input.min = String(meta.min);
      input.max = String(meta.max);
      input.step = "1";
      input.value = "0";
      input.id = `rating-${name}`;
      row.appendChild(input);
      this.ratingForm.appendChild(row);
      this.ratingInputs[name] = input;
    }
    const submit = el("button", "ctl", "submit rating");
    submit.id = "btn-rate";
    submit.addEventListener("click", () => {
      const ratings: Record<string, number> = {};
      for (const [name, input] of Object.entries(this.ratingInputs)) {
        ratings[name] = Math.round(Number(input.value));
      }
      void this.client.send({ cmd: "rate", ratings });
    });
    this.ratingForm.appendChild(submit);
    this.buttons.rate = submit;
  }

  render(): void {
    const store = this.store;
    this.syncRatingForm();

    const banner = store.bannerText;
    this.banner.classList.toggle("hidden", banner === null);
    if (banner !== null) this.banner.textContent = banner;
    this.killFaultBanner.classList.toggle("hidden", !store.killFault);

    this.connBadge.textContent = store.connection;
    this.connBadge.dataset.state = store.connection;

    const safety = store.safety ?? "—";
    this.safetyBadge.textContent = safety;
    this.safetyBadge.dataset.state = safety;

    const frame = store.latest;
    const limit = store.hello?.force_limit ?? 10;
    const f: [number, number, number] = frame ? frame.force : [0, 0, 0];
    const mag = Math.sqrt(f[0] ** 2 + f[1] ** 2 + f[2] ** 2);
    this.forceReadout.textContent = `|F| ${mag.toFixed(2)} N / limit ${limit.toFixed(0)} N`;
    this.forceReadout.classList.toggle("saturated", mag >= limit - 1e-9);
    AXES.forEach((axis, i) => {
      const frac = store.forceFraction(f[i] ?? 0); // display saturates at the limit
      const bar = this.bars[axis]!;
      bar.pos.style.width = `${Math.max(0, frac) * 50}%`;
      bar.neg.style.width = `${Math.max(0, -frac) * 50}%`;
      bar.label.textContent = (f[i] ?? 0).toFixed(2);
    });
    // top-down arrow: +x forward (up on screen), +y to the right
    const scale = Math.min(1, mag / limit) * 52;
    const angle = Math.atan2(f[1] ?? 0, f[0] ?? 0);
    this.arrow.setAttribute("x2", (Math.sin(angle) * scale).toFixed(1));
    this.arrow.setAttribute("y2", (-Math.cos(angle) * scale).toFixed(1));

    const leans = store.leanHistory.toArray().map((s) => s.value);
    const leanMax = Math.max(0.05, ...leans);
    this.leanLine.setAttribute("points", polylinePoints(leans, leanMax));
    const ticks = store.tickUsHistory.toArray();
    const tickMax = Math.max(100, ...ticks);
    this.tickLine.setAttribute("points", polylinePoints(ticks, tickMax));

    const trial = frame?.trial;
    this.trialInfo.textContent = `trial ${trial ? trial.index : "—"} / phase ${store.trialPhase}`;
    if (typeof frame?.gain === "number" && document.activeElement !== this.gainInput) {
      this.gainInput.value = String(frame.gain);
    }
    const ack = store.lastAck;
    this.ackLine.textContent = ack
      ? `${ack.cmd ?? "cmd"}: ${ack.ok ? "ok" : "rejected"}${ack.reason ? ` (${ack.reason})` : ""}`
      : "";
    this.ackLine.classList.toggle("error", !!ack && !ack.ok);

    const controls = store.controls();
    this.buttons.kill!.disabled = !controls.kill;
    this.buttons.arm!.disabled = !controls.arm;
    this.buttons.engage!.disabled = !controls.engage;
    this.buttons.release!.disabled = !controls.release;
    this.buttons.rearm!.disabled = !controls.rearm;
    this.buttons.set_gain!.disabled = !controls.setGain;
    this.gainInput.disabled = !controls.setGain;
    this.buttons.start_trial!.disabled = !controls.startTrial;
    this.ratingForm.classList.toggle("hidden", !controls.rate);
    if (this.buttons.rate) this.buttons.rate.disabled = !controls.rate;
  }
}
