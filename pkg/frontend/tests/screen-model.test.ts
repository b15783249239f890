import { describe, expect, it } from "vitest";

import {
  lockingReserveSuggestion,
  mayIssue,
  sectionsFor,
  validateLoadTarget,
  validatePlantFlow,
} from "../src/screen-model.js";

describe("role directive table", () => {
  it("operator toggles agents and nothing else", () => {
    expect(mayIssue("operator", "enable_agent")).toBe(true);
    expect(mayIssue("operator", "disable_agent")).toBe(true);
    expect(mayIssue("operator", "set_plant_flow")).toBe(false);
    expect(mayIssue("operator", "set_load_target")).toBe(false);
  });

  it("dispatch commands load, not agents or flow", () => {
    expect(mayIssue("dispatch", "set_load_target")).toBe(true);
    expect(mayIssue("dispatch", "load_shed")).toBe(true);
    expect(mayIssue("dispatch", "disable_agent")).toBe(false);
    expect(mayIssue("dispatch", "set_plant_flow")).toBe(false);
  });

  it("corps assigns plant flow only", () => {
    expect(mayIssue("corps", "set_plant_flow")).toBe(true);
    expect(mayIssue("corps", "set_load_target")).toBe(false);
    expect(mayIssue("corps", "disable_agent")).toBe(false);
  });
});

describe("screen sections", () => {
  it("operator gets agent panel, benefit, alarms; no setpoint forms", () => {
    const s = sectionsFor("operator");
    expect(s.agentPanel).toBe(true);
    expect(s.benefitTile).toBe(true);
    expect(s.alarmBanner).toBe(true);
    expect(s.loadTargetForm).toBe(false);
    expect(s.plantFlowForm).toBe(false);
  });

  it("dispatch gets load form, power, benefit, alarms; no agent panel", () => {
    const s = sectionsFor("dispatch");
    expect(s.loadTargetForm).toBe(true);
    expect(s.benefitTile).toBe(true);
    expect(s.alarmBanner).toBe(true);
    expect(s.agentPanel).toBe(false);
    expect(s.plantFlowForm).toBe(false);
  });

  it("corps gets flow form with the reserve helper and the flow trend", () => {
    const s = sectionsFor("corps");
    expect(s.plantFlowForm).toBe(true);
    expect(s.lockingReserveHelper).toBe(true);
    expect(s.flowTrend).toBe(true);
    expect(s.loadTargetForm).toBe(false);
    expect(s.agentPanel).toBe(false);
  });
});

describe("locking reserve helper", () => {
  it("subtracts the 5000 CFS reserve", () => {
    expect(lockingReserveSuggestion(30000)).toBe(25000);
  });

  it("clamps at zero", () => {
    expect(lockingReserveSuggestion(5000)).toBe(0);
    expect(lockingReserveSuggestion(4000)).toBe(0);
  });

  it("rejects nonsense input", () => {
    expect(lockingReserveSuggestion(NaN)).toBe(0);
    expect(lockingReserveSuggestion(-10)).toBe(0);
  });
});

describe("form validation", () => {
  it("plant flow bounds", () => {
    expect(validatePlantFlow(25000)).toBeNull();
    expect(validatePlantFlow(-1)).toMatch(/negative/);
    expect(validatePlantFlow(NaN)).toMatch(/enter/);
    expect(validatePlantFlow(99999)).toMatch(/rating/);
  });

  it("load target bounds", () => {
    expect(validateLoadTarget(55, 80)).toBeNull();
    expect(validateLoadTarget(0, 80)).toMatch(/positive/);
    expect(validateLoadTarget(95, 80)).toMatch(/rating/);
  });
});
