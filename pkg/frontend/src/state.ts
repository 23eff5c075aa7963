// Pure view-state reducer.
//
// The console never flips an indicator optimistically: the view is a pure
// function of (initial FullState message, ordered event stream), so
// replaying the same stream always renders the same state.  All server
// requests are fire-and-confirm; only the events below mutate the view.

import {
  Appliance,
  Connection,
  FullStateMessage,
  HearthEvent,
  PowerState,
  Route,
  StreamMessage,
  TimerJob,
  TimerStatus,
  ViewState,
  isFullState,
} from "./types.js";

export function initialViewState(): ViewState {
  return {
    connection: "reconnecting",
    route: "main",
    appliances: [],
    master: false,
    timers: [],
    ports: [],
    serverNow: null,
    latestSeq: 0,
    lastCommand: null,
  };
}

function withIndicators(appliance: Appliance, master: boolean): Appliance {
  const powered = master && appliance.state === "on";
  return { ...appliance, led: powered, socket_powered: powered };
}

function applyFullState(state: ViewState, msg: FullStateMessage): ViewState {
  return {
    ...state,
    appliances: msg.payload.appliances.slice(),
    master: msg.payload.master,
    timers: msg.payload.timers.slice(),
    ports: msg.payload.ports.slice(),
    serverNow: msg.payload.now ?? state.serverNow,
    latestSeq: msg.seq,
  };
}

function updateAppliance(
  appliances: Appliance[],
  channel: number,
  state: PowerState,
  master: boolean,
): Appliance[] {
  return appliances.map((a) =>
    a.channel === channel ? withIndicators({ ...a, state }, master) : a,
  );
}

function updateTimer(timers: TimerJob[], id: string, status: TimerStatus): TimerJob[] {
  return timers.map((t) => (t.id === id ? { ...t, status } : t));
}

function applyEvent(state: ViewState, event: HearthEvent): ViewState {
  const next: ViewState = { ...state, latestSeq: event.seq, serverNow: event.ts };
  const p = event.payload;
  switch (event.kind) {
    case "StateChanged":
      next.appliances = updateAppliance(
        state.appliances,
        p.channel as number,
        p.state as PowerState,
        state.master,
      );
      return next;
    case "MasterSwitched": {
      const master = Boolean(p.on);
      next.master = master;
      next.appliances = state.appliances.map((a) => withIndicators(a, master));
      return next;
    }
    case "TimerFired":
      next.timers = updateTimer(state.timers, String(p.id), "fired");
      return next;
    case "TimerMissed":
      next.timers = updateTimer(state.timers, String(p.id), "missed");
      return next;
    case "CommandRecognized":
      next.lastCommand = {
        accepted: true,
        word: p.word as string,
        distance: p.distance as number,
        confidence: p.confidence as number,
      };
      return next;
    case "CommandRejected":
      next.lastCommand = {
        accepted: false,
        reason: p.reason as string,
        bestWord: (p.best_word as string) ?? undefined,
        confidence: (p.confidence as number) ?? undefined,
      };
      return next;
    default:
      return next;
  }
}

export function applyMessage(state: ViewState, msg: StreamMessage): ViewState {
  if (isFullState(msg)) {
    return applyFullState(state, msg);
  }
  return applyEvent(state, msg);
}

export function replay(
  initial: FullStateMessage,
  events: HearthEvent[],
  base?: ViewState,
): ViewState {
  let state = applyMessage(base ?? initialViewState(), initial);
  for (const event of events) {
    state = applyMessage(state, event);
  }
  return state;
}

export function setConnection(state: ViewState, connection: Connection): ViewState {
  return { ...state, connection };
}

export function setRoute(state: ViewState, route: Route): ViewState {
  return { ...state, route };
}

// Locally created timers are appended so the pending list updates on the
// form response; stream transitions later adjust their status by id.
export function upsertTimer(state: ViewState, timer: TimerJob): ViewState {
  const known = state.timers.some((t) => t.id === timer.id);
  const timers = known
    ? state.timers.map((t) => (t.id === timer.id ? timer : t))
    : [...state.timers, timer];
  timers.sort((a, b) =>
    a.fire_at < b.fire_at ? -1 : a.fire_at > b.fire_at ? 1 : a.seq - b.seq,
  );
  return { ...state, timers };
}

export interface TimerFormCheck {
  ok: boolean;
  fireAt?: string;
  error?: string;
  warning?: string;
}

// Inline validation for the timer form.  An unparseable date is an error
// (no request); a time already beyond the grace window is submittable but
// warned about, since the service will mark it missed.
export function validateTimerForm(
  dateText: string,
  timeText: string,
  serverNow: string | null,
  graceS = 60,
): TimerFormCheck {
  if (!dateText.trim() || !timeText.trim()) {
    return { ok: false, error: "date and time are required" };
  }
  const time = timeText.trim().length === 5 ? `${timeText.trim()}:00` : timeText.trim();
  // The form's fields are UTC; anchor explicitly so parsing never depends
  // on the browser's local timezone.
  const combined = `${dateText.trim()}T${time}Z`;
  const parsed = new Date(combined);
  if (Number.isNaN(parsed.getTime())) {
    return { ok: false, error: `not a valid date/time: ${combined}` };
  }
  const fireAt = parsed.toISOString();
  if (serverNow) {
    const now = new Date(serverNow).getTime();
    if (!Number.isNaN(now) && parsed.getTime() < now - graceS * 1000) {
      return {
        ok: true,
        fireAt,
        warning: "fire time is already past the grace window; the job will be marked missed",
      };
    }
  }
  return { ok: true, fireAt };
}

// Command vocabulary for the voice panel's per-command buttons.
export function commandWords(appliances: Appliance[]): string[] {
  const words: string[] = [];
  for (const a of appliances) {
    words.push(`${a.name}On`, `${a.name}Off`);
  }
  return words;
}
