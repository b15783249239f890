/** Small DOM builders: numeric tiles, forms, toggles, the alarm banner. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export class Tile {
  readonly root: HTMLElement;
  private valueEl: HTMLElement;

  constructor(label: string, unit: string, id = "") {
    this.root = el("div", "tile");
    if (id) this.root.dataset.tile = id;
    this.root.appendChild(el("div", "tile-label", label));
    this.valueEl = el("div", "tile-value", "--");
    this.root.appendChild(this.valueEl);
    this.root.appendChild(el("div", "tile-unit", unit));
  }

  set(value: number | string, digits = 2): void {
    this.valueEl.textContent =
      typeof value === "number" ? value.toFixed(digits) : value;
  }
}

export class AlarmBanner {
  readonly root: HTMLElement;

  constructor() {
    this.root = el("div", "alarm-banner");
    this.root.dataset.panel = "alarms";
    this.root.hidden = true;
  }

  update(alarms: { unit: number; kind: string }[]): void {
    this.root.textContent = "";
    if (alarms.length === 0) {
      this.root.hidden = true;
      return;
    }
    this.root.hidden = false;
    for (const a of alarms) {
      this.root.appendChild(
        el("span", "alarm-item", `unit ${a.unit}: ${a.kind.replace(/_/g, " ")}`),
      );
    }
  }
}

export interface NumberFormOptions {
  label: string;
  unit: string;
  id: string;
  submitText: string;
  validate: (value: number) => string | null;
  onSubmit: (value: number) => Promise<void>;
}

/** Labelled numeric input with inline validation and backend errors. */
export class NumberForm {
  readonly root: HTMLElement;
  readonly input: HTMLInputElement;
  readonly error: HTMLElement;

  constructor(private opts: NumberFormOptions) {
    this.root = el("form", "number-form") as HTMLElement;
    this.root.dataset.form = opts.id;
    const label = el("label", "", opts.label + " ");
    this.input = el("input") as HTMLInputElement;
    this.input.type = "number";
    this.input.step = "any";
    label.appendChild(this.input);
    label.appendChild(el("span", "form-unit", ` ${opts.unit}`));
    this.root.appendChild(label);
    const button = el("button", "", opts.submitText);
    button.type = "submit";
    this.root.appendChild(button);
    this.error = el("div", "form-error");
    this.error.dataset.error = opts.id;
    this.root.appendChild(this.error);
    this.root.addEventListener("submit", (e) => {
      e.preventDefault();
      void this.submit();
    });
  }

  async submit(): Promise<void> {
    const value = parseFloat(this.input.value);
    const problem = this.opts.validate(value);
    if (problem !== null) {
      this.error.textContent = problem;
      return;
    }
    this.error.textContent = "";
    try {
      await this.opts.onSubmit(value);
    } catch (err) {
      this.error.textContent = err instanceof Error ? err.message : String(err);
    }
  }
}

export interface AgentRow {
  root: HTMLElement;
  mode: HTMLElement;
  qBias: HTMLElement;
  bpBias: HTMLElement;
  benefit: HTMLElement;
  enableButton: HTMLButtonElement;
  disableButton: HTMLButtonElement;
}

/** One unit's agent controls: live bias readouts plus the two toggles. */
export function agentRow(
  unit: number,
  onToggle: (unit: number, enable: boolean) => Promise<void>,
): AgentRow {
  const root = el("div", "agent-row");
  root.dataset.agentRow = String(unit);
  root.appendChild(el("span", "agent-label", `agent ${unit}`));
  const mode = el("span", "agent-mode", "--");
  mode.dataset.field = `mode-${unit}`;
  const qBias = el("span", "agent-qbias", "--");
  qBias.dataset.field = `qbias-${unit}`;
  const bpBias = el("span", "agent-bpbias", "--");
  bpBias.dataset.field = `bpbias-${unit}`;
  const benefit = el("span", "agent-benefit", "--");
  benefit.dataset.field = `benefit-${unit}`;
  const enableButton = el("button", "", "enable") as HTMLButtonElement;
  enableButton.dataset.action = `enable-${unit}`;
  const disableButton = el("button", "", "disable") as HTMLButtonElement;
  disableButton.dataset.action = `disable-${unit}`;
  enableButton.addEventListener("click", () => void onToggle(unit, true));
  disableButton.addEventListener("click", () => void onToggle(unit, false));
  for (const node of [mode, qBias, bpBias, benefit, enableButton, disableButton]) {
    root.appendChild(node);
  }
  return { root, mode, qBias, bpBias, benefit, enableButton, disableButton };
}
