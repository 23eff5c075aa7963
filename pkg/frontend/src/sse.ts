// Event-stream subscription with exponential backoff.
//
// The server pushes a FullState message as the first frame of every
// subscription, so reconnecting automatically resynchronizes the view
// before events resume; the reducer just replaces its state.

import { StreamMessage } from "./types.js";

export interface StreamHandle {
  close: () => void;
}

const BACKOFF_START_MS = 1000;
const BACKOFF_CAP_MS = 15000;

export function connectStream(
  onMessage: (msg: StreamMessage) => void,
  onConnection: (live: boolean) => void,
  url = "/api/stream",
): StreamHandle {
  let source: EventSource | null = null;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let backoff = BACKOFF_START_MS;
  let closed = false;

  function open() {
    if (closed) return;
    source = new EventSource(url);
    source.onopen = () => {
      backoff = BACKOFF_START_MS;
      onConnection(true);
    };
    source.onmessage = (e) => {
      try {
        onMessage(JSON.parse(e.data) as StreamMessage);
      } catch {
        // tolerate malformed frames
      }
    };
    source.onerror = () => {
      if (closed) return;
      source?.close();
      source = null;
      onConnection(false);
      timer = setTimeout(() => {
        timer = null;
        open();
      }, backoff);
      backoff = Math.min(backoff * 2, BACKOFF_CAP_MS);
    };
  }

  open();
  return {
    close: () => {
      closed = true;
      if (timer) clearTimeout(timer);
      source?.close();
    },
  };
}
