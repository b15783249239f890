/**
 * The three role screens. Each renders only the sections its role
 * permits, binds live snapshot values, and turns every control action
 * into a gateway directive; nothing is applied locally.
 */

import type { Gateway } from "./api.js";
import {
  lockingReserveSuggestion,
  sectionsFor,
  validateLoadTarget,
  validatePlantFlow,
  type Role,
} from "./screen-model.js";
import { AgentRow, AlarmBanner, NumberForm, Tile, agentRow, el } from "./panels.js";
import { StripChart } from "./stripchart.js";
import type { Snapshot } from "./types.js";

const PLANT_RATING_MW = 80;

export interface Screen {
  readonly root: HTMLElement;
  update(snapshot: Snapshot): void;
}

function chartCanvas(label: string): HTMLCanvasElement {
  const canvas = el("canvas") as HTMLCanvasElement;
  canvas.width = 560;
  canvas.height = 120;
  canvas.dataset.trend = label;
  return canvas;
}

abstract class BaseScreen implements Screen {
  readonly root: HTMLElement;

  constructor(role: Role) {
    this.root = el("div", `screen screen-${role}`);
    this.root.dataset.role = role;
  }

  abstract update(snapshot: Snapshot): void;
}

export class OperatorScreen extends BaseScreen {
  private unitTiles: { p: Tile; q: Tile; bp: Tile; temp: Tile; vib: Tile }[] = [];
  private agents: AgentRow[] = [];
  private benefit: Tile;
  private banner: AlarmBanner;
  private trend: StripChart;

  constructor(
    private gateway: Gateway,
    nUnits = 3,
  ) {
    super("operator");
    this.root.appendChild(el("h2", "", "unit operator"));
    this.banner = new AlarmBanner();
    this.root.appendChild(this.banner.root);

    const tiles = el("div", "tiles");
    for (let u = 1; u <= nUnits; u++) {
      const group = el("div", "unit-group");
      group.dataset.unit = String(u);
      group.appendChild(el("h3", "", `unit ${u}`));
      const set = {
        p: new Tile(`U${u} load`, "MW", `u${u}-p`),
        q: new Tile(`U${u} flow`, "CFS", `u${u}-q`),
        bp: new Tile(`U${u} blade`, "%", `u${u}-bp`),
        temp: new Tile(`U${u} stator`, "degF", `u${u}-temp`),
        vib: new Tile(`U${u} vibration`, "mils", `u${u}-vib`),
      };
      for (const t of Object.values(set)) group.appendChild(t.root);
      tiles.appendChild(group);
      this.unitTiles.push(set);
    }
    this.root.appendChild(tiles);

    const agentsPanel = el("div", "agents-panel");
    agentsPanel.dataset.panel = "agents";
    for (let u = 1; u <= nUnits; u++) {
      const row = agentRow(u, (unit, enable) =>
        this.gateway.submitDirective({
          kind: enable ? "enable_agent" : "disable_agent",
          unit,
        }),
      );
      agentsPanel.appendChild(row.root);
      this.agents.push(row);
    }
    this.root.appendChild(agentsPanel);

    this.benefit = new Tile("agent benefit", "MW vs baseline", "benefit");
    this.root.appendChild(this.benefit.root);
    const canvas = chartCanvas("plant-load");
    this.root.appendChild(canvas);
    this.trend = new StripChart(canvas, "plant MW");
  }

  update(s: Snapshot): void {
    s.units.forEach((u, i) => {
      const t = this.unitTiles[i];
      if (!t) return;
      t.p.set(u.p_mw);
      t.q.set(u.q_act_cfs, 0);
      t.bp.set(u.bp_pct, 1);
      t.temp.set(u.stator_temp_f, 1);
      t.vib.set(u.vibration_mils, 1);
      const row = this.agents[i];
      if (row && u.agent) {
        row.mode.textContent = u.agent.mode;
        row.qBias.textContent = `${u.agent.q_bias_cfs.toFixed(0)} CFS`;
        row.bpBias.textContent = `${u.agent.bp_bias_pct.toFixed(2)} %`;
        row.benefit.textContent = `${u.agent.benefit_mw.toFixed(3)} MW`;
        row.enableButton.disabled = u.agent.enabled;
        row.disableButton.disabled = !u.agent.enabled;
      }
    });
    this.benefit.set(s.plant.benefit_mw, 3);
    this.banner.update(s.alarms);
    this.trend.push(s.minute, s.plant.sum_p_mw);
  }
}

export class DispatchScreen extends BaseScreen {
  private sumP: Tile;
  private benefit: Tile;
  private target: Tile;
  private banner: AlarmBanner;
  private trend: StripChart;
  readonly loadForm: NumberForm;

  constructor(private gateway: Gateway) {
    super("dispatch");
    this.root.appendChild(el("h2", "", "corporate dispatch"));
    this.banner = new AlarmBanner();
    this.root.appendChild(this.banner.root);

    this.sumP = new Tile("plant load", "MW", "sum-p");
    this.target = new Tile("load target", "MW", "load-target");
    this.benefit = new Tile("agent benefit", "MW vs baseline", "benefit");
    for (const t of [this.sumP, this.target, this.benefit]) {
      this.root.appendChild(t.root);
    }

    this.loadForm = new NumberForm({
      label: "new load setpoint",
      unit: "MW",
      id: "load-target",
      submitText: "send to plant",
      validate: (v) => validateLoadTarget(v, PLANT_RATING_MW),
      onSubmit: (v) => this.gateway.submitDirective({ kind: "set_load_target", value: v }),
    });
    this.root.appendChild(this.loadForm.root);

    const canvas = chartCanvas("plant-load");
    this.root.appendChild(canvas);
    this.trend = new StripChart(canvas, "plant MW");
  }

  update(s: Snapshot): void {
    this.sumP.set(s.plant.sum_p_mw);
    this.target.set(s.plant.load_target_mw === null ? "none" : s.plant.load_target_mw);
    this.benefit.set(s.plant.benefit_mw, 3);
    this.banner.update(s.alarms);
    this.trend.push(s.minute, s.plant.sum_p_mw);
  }
}

export class CorpsScreen extends BaseScreen {
  private sumQ: Tile;
  private allocated: Tile;
  private head: Tile;
  private suggestion: HTMLElement;
  private trend: StripChart;
  readonly flowForm: NumberForm;
  readonly riverInput: HTMLInputElement;

  constructor(private gateway: Gateway) {
    super("corps");
    this.root.appendChild(el("h2", "", "army corps of engineers"));

    this.sumQ = new Tile("plant actual flow", "CFS", "sum-q");
    this.allocated = new Tile("allocated flow", "CFS", "q-target");
    this.head = new Tile("plant head", "ft", "head");
    for (const t of [this.sumQ, this.allocated, this.head]) {
      this.root.appendChild(t.root);
    }

    this.flowForm = new NumberForm({
      label: "plant flow setpoint",
      unit: "CFS",
      id: "plant-flow",
      submitText: "assign flow",
      validate: validatePlantFlow,
      onSubmit: (v) => this.gateway.submitDirective({ kind: "set_plant_flow", value: v }),
    });
    this.root.appendChild(this.flowForm.root);

    // locking-reserve helper: river requirement minus the 5000 CFS reserve
    const helper = el("div", "reserve-helper");
    helper.dataset.panel = "locking-reserve";
    const label = el("label", "", "required river flow ");
    this.riverInput = el("input") as HTMLInputElement;
    this.riverInput.type = "number";
    this.riverInput.dataset.field = "river-flow";
    label.appendChild(this.riverInput);
    helper.appendChild(label);
    this.suggestion = el("span", "reserve-suggestion", "");
    this.suggestion.dataset.field = "reserve-suggestion";
    helper.appendChild(this.suggestion);
    const apply = el("button", "", "use suggestion") as HTMLButtonElement;
    apply.type = "button";
    apply.dataset.action = "apply-suggestion";
    helper.appendChild(apply);
    this.riverInput.addEventListener("input", () => this.refreshSuggestion());
    apply.addEventListener("click", () => {
      this.refreshSuggestion();
      this.flowForm.input.value = String(
        lockingReserveSuggestion(parseFloat(this.riverInput.value)),
      );
    });
    this.root.appendChild(helper);

    const canvas = chartCanvas("plant-flow");
    this.root.appendChild(canvas);
    this.trend = new StripChart(canvas, "plant CFS", 240, "#81c784");
  }

  private refreshSuggestion(): void {
    const river = parseFloat(this.riverInput.value);
    if (!Number.isFinite(river)) {
      this.suggestion.textContent = "";
      return;
    }
    const available = lockingReserveSuggestion(river);
    this.suggestion.textContent = `available after 5000 CFS locking reserve: ${available} CFS`;
  }

  update(s: Snapshot): void {
    this.sumQ.set(s.plant.sum_q_act_cfs, 0);
    this.allocated.set(s.plant.q_sp_target_cfs, 0);
    this.head.set(s.plant.h_net_ft, 2);
    this.trend.push(s.minute, s.plant.sum_q_act_cfs);
  }
}

export function buildScreen(role: Role, gateway: Gateway, nUnits = 3): Screen {
  const sections = sectionsFor(role);
  switch (role) {
    case "operator":
      return new OperatorScreen(gateway, nUnits);
    case "dispatch":
      return new DispatchScreen(gateway);
    case "corps":
      return new CorpsScreen(gateway);
    default: {
      void sections;
      throw new Error(`unknown role ${role as string}`);
    }
  }
}
