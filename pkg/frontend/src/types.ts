// Wire types mirroring the service's JSON bodies and stream messages.

export type PowerState = "on" | "off";

export interface Appliance {
  name: string;
  channel: number;
  kind: string;
  state: PowerState;
  led: boolean;
  socket_powered: boolean;
}

export type TimerStatus = "pending" | "fired" | "missed" | "cancelled";

export interface TimerJob {
  id: string;
  fire_at: string;
  channel: number;
  device: string | null;
  desired: PowerState;
  seq: number;
  status: TimerStatus;
}

export interface PortInfo {
  address: string;
  latch: number;
  latch_hex: string;
  pins: number[];
}

export interface HearthEvent {
  seq: number;
  ts: string;
  kind: string;
  source: string;
  payload: Record<string, unknown>;
}

export interface FullStatePayload {
  appliances: Appliance[];
  master: boolean;
  timers: TimerJob[];
  ports: PortInfo[];
  now: string;
}

export interface FullStateMessage {
  kind: "FullState";
  seq: number;
  payload: FullStatePayload;
}

export type StreamMessage = FullStateMessage | HearthEvent;

export function isFullState(msg: StreamMessage): msg is FullStateMessage {
  return msg.kind === "FullState";
}

export interface CommandBanner {
  accepted: boolean;
  word?: string;
  distance?: number;
  confidence?: number;
  reason?: string;
  bestWord?: string;
}

export type Route = "main" | "manual" | "timer" | "voice";
export type Connection = "live" | "reconnecting";

export interface ViewState {
  connection: Connection;
  route: Route;
  appliances: Appliance[];
  master: boolean;
  timers: TimerJob[];
  ports: PortInfo[];
  serverNow: string | null;
  latestSeq: number;
  lastCommand: CommandBanner | null;
}
