/**
 * Role model: which controls and readouts each SCADA user gets.
 *
 * Pure functions so the role filtering is testable without a DOM. A
 * screen renders only what its role permits; every state change still
 * goes through the gateway, which enforces the same table server-side.
 */

import type { DirectiveKind } from "./types.js";

export type Role = "operator" | "dispatch" | "corps";

export const ROLE_DIRECTIVES: Record<Role, DirectiveKind[]> = {
  operator: ["enable_agent", "disable_agent"],
  dispatch: ["set_load_target", "load_shed"],
  corps: ["set_plant_flow"],
};

export function mayIssue(role: Role, kind: DirectiveKind): boolean {
  return ROLE_DIRECTIVES[role].includes(kind);
}

export interface ScreenSections {
  unitTiles: boolean;
  agentPanel: boolean; // enable/disable toggles + live bias values
  benefitTile: boolean;
  alarmBanner: boolean;
  loadTargetForm: boolean;
  plantFlowForm: boolean;
  lockingReserveHelper: boolean;
  powerTrend: boolean;
  flowTrend: boolean;
}

export function sectionsFor(role: Role): ScreenSections {
  switch (role) {
    case "operator":
      return {
        unitTiles: true,
        agentPanel: true,
        benefitTile: true,
        alarmBanner: true,
        loadTargetForm: false,
        plantFlowForm: false,
        lockingReserveHelper: false,
        powerTrend: true,
        flowTrend: false,
      };
    case "dispatch":
      return {
        unitTiles: false,
        agentPanel: false,
        benefitTile: true,
        alarmBanner: true,
        loadTargetForm: true,
        plantFlowForm: false,
        lockingReserveHelper: false,
        powerTrend: true,
        flowTrend: false,
      };
    case "corps":
      return {
        unitTiles: false,
        agentPanel: false,
        benefitTile: false,
        alarmBanner: false,
        loadTargetForm: false,
        plantFlowForm: true,
        lockingReserveHelper: true,
        powerTrend: false,
        flowTrend: true,
      };
  }
}

/** Flow the Corps withholds for lock operations, CFS. */
export const LOCKING_RESERVE_CFS = 5000;

/**
 * The Corps' working arithmetic: river requirement minus the locking
 * reserve is what the plant may be allocated. Never negative.
 */
export function lockingReserveSuggestion(
  requiredRiverFlow: number,
  reserve: number = LOCKING_RESERVE_CFS,
): number {
  if (!Number.isFinite(requiredRiverFlow) || requiredRiverFlow < 0) {
    return 0;
  }
  return Math.max(0, requiredRiverFlow - reserve);
}

/** Validation message for a plant flow setpoint, or null when acceptable. */
export function validatePlantFlow(value: number): string | null {
  if (!Number.isFinite(value)) return "enter a flow in CFS";
  if (value < 0) return "flow must not be negative";
  if (value > 40000) return "flow exceeds plant intake rating";
  return null;
}

/** Validation message for a load target, or null when acceptable. */
export function validateLoadTarget(value: number, ratedPlantMw: number): string | null {
  if (!Number.isFinite(value)) return "enter a load target in MW";
  if (value <= 0) return "load target must be positive";
  if (value > ratedPlantMw) return `load target above plant rating (${ratedPlantMw} MW)`;
  return null;
}
