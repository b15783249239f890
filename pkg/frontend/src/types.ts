/**
 * Wire shapes of the gateway's snapshot documents.
 *
 * These mirror the JSON the /snapshot and /stream endpoints emit; the
 * console renders them as-is and holds no authoritative state of its own.
 */

export interface AgentStatusView {
  mode: string;
  enabled: boolean;
  q_bias_cfs: number;
  bp_bias_pct: number;
  benefit_mw: number;
  alarms: string[];
  unallocated_cfs: number;
}

export interface UnitSnapshot {
  unit: number;
  gp_pct: number;
  bp_pct: number;
  h_net_ft: number;
  q_act_cfs: number;
  q_sp_cfs: number;
  p_mw: number;
  stator_temp_f: number;
  vibration_mils: number;
  online: boolean;
  agent?: AgentStatusView;
}

export interface PlantSnapshot {
  h_net_ft: number;
  sum_q_act_cfs: number;
  sum_q_sp_cfs: number;
  sum_p_mw: number;
  q_sp_target_cfs: number;
  load_target_mw: number | null;
  season: number;
  benefit_mw: number;
  benefit_mwh: number;
}

export interface AlarmView {
  unit: number;
  kind: string;
  value: number;
}

export interface Snapshot {
  minute: number;
  units: UnitSnapshot[];
  plant: PlantSnapshot;
  alarms: AlarmView[];
}

export type DirectiveKind =
  | "set_plant_flow"
  | "set_load_target"
  | "load_shed"
  | "enable_agent"
  | "disable_agent";

export interface DirectiveBody {
  kind: DirectiveKind;
  unit?: number;
  value?: number;
}
