// Typed client for the service endpoints.  The console holds no control
// logic: every call is a plain request whose effect arrives back through
// the event stream.

import { Appliance, PowerState, TimerJob } from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
  const response = await fetch(path, {
    method,
    headers: body === undefined ? undefined : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  let data: any = null;
  try {
    data = await response.json();
  } catch {
    data = null;
  }
  if (!response.ok) {
    const err = data?.error ?? {};
    throw new ApiError(err.code ?? String(response.status),
      err.message ?? response.statusText, response.status);
  }
  return data as T;
}

export function fetchAppliances(): Promise<{ appliances: Appliance[]; master: boolean }> {
  return request("GET", "/api/appliances");
}

export function setApplianceState(selector: string | number, state: PowerState) {
  return request<{ appliance: Appliance; latch: number }>(
    "PUT",
    `/api/appliances/${encodeURIComponent(String(selector))}/state`,
    { state },
  );
}

export function setMaster(on: boolean): Promise<{ master: boolean }> {
  return request("PUT", "/api/master", { on });
}

export function fetchTimers(): Promise<{ timers: TimerJob[] }> {
  return request("GET", "/api/timers");
}

export function createTimer(fireAt: string, device: string, state: PowerState) {
  return request<{ timer: TimerJob }>("POST", "/api/timers", {
    fire_at: fireAt,
    device,
    state,
  });
}

export function cancelTimer(id: string) {
  return request<{ timer: TimerJob }>("DELETE", `/api/timers/${encodeURIComponent(id)}`);
}

export interface UtteranceResult {
  accepted: boolean;
  word?: string;
  distance?: number;
  confidence?: number;
  reason?: string;
  best?: { word: string; distance: number; confidence: number } | null;
}

export function sendWord(word: string): Promise<{ result: UtteranceResult }> {
  return request("POST", "/api/utterance", { word });
}

export function sendPhonemes(phonemes: string): Promise<{ result: UtteranceResult }> {
  return request("POST", "/api/utterance", { phonemes });
}
