// Bootstrap: one stream subscription, one render loop, event delegation.
// Server events are the only source of truth for indicators; requests are
// fire-and-confirm.

import * as api from "./api.js";
import {
  applyMessage,
  initialViewState,
  setConnection,
  setRoute,
  upsertTimer,
  validateTimerForm,
} from "./state.js";
import { connectStream } from "./sse.js";
import { Route, ViewState } from "./types.js";
import { renderApp } from "./views.js";

let state: ViewState = initialViewState();
let formError = "";
let formWarning = "";

const root = document.getElementById("app")!;

function rerender() {
  root.innerHTML = renderApp(state, formError, formWarning);
}

function update(next: ViewState) {
  state = next;
  rerender();
}

function routeFromHash(): Route {
  const hash = window.location.hash.replace(/^#\/?/, "");
  if (hash === "manual" || hash === "timer" || hash === "voice") {
    return hash;
  }
  return "main";
}

window.addEventListener("hashchange", () => {
  formError = formWarning = "";
  update(setRoute(state, routeFromHash()));
});

// The stream outlives navigation; reconnects resynchronize via FullState.
connectStream(
  (msg) => update(applyMessage(state, msg)),
  (live) => update(setConnection(state, live ? "live" : "reconnecting")),
);

function toast(message: string) {
  const el = document.createElement("div");
  el.className = "toast";
  el.textContent = message;
  document.body.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}

function describe(err: unknown): string {
  if (err instanceof api.ApiError) return `${err.code}: ${err.message}`;
  return String(err);
}

root.addEventListener("click", (e) => {
  const target = (e.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!target || target.hasAttribute("disabled")) return;
  const action = target.dataset.action;
  if (action === "switch") {
    api
      .setApplianceState(target.dataset.selector!, target.dataset.state as "on" | "off")
      .catch((err) => toast(describe(err)));
  } else if (action === "master") {
    api.setMaster(target.dataset.on === "true").catch((err) => toast(describe(err)));
  } else if (action === "say-word") {
    api.sendWord(target.dataset.word!).catch((err) => toast(describe(err)));
  } else if (action === "cancel-timer") {
    api
      .cancelTimer(target.dataset.id!)
      .then(({ timer }) => update(upsertTimer(state, timer)))
      .catch((err) => toast(describe(err)));
  }
});

root.addEventListener("submit", (e) => {
  const form = e.target as HTMLFormElement;
  e.preventDefault();
  if (form.id === "timer-form") {
    const data = new FormData(form);
    const check = validateTimerForm(
      String(data.get("date") ?? ""),
      String(data.get("time") ?? ""),
      state.serverNow,
    );
    formError = check.error ?? "";
    formWarning = check.warning ?? "";
    if (!check.ok) {
      rerender();
      return;
    }
    api
      .createTimer(check.fireAt!, String(data.get("device")), data.get("state") as "on" | "off")
      .then(({ timer }) => update(upsertTimer(state, timer)))
      .catch((err) => {
        formError = describe(err);
        rerender();
      });
  } else if (form.id === "phoneme-form") {
    const phonemes = String(new FormData(form).get("phonemes") ?? "").trim();
    if (!phonemes) return;
    // The result banner arrives via CommandRecognized/CommandRejected events.
    api.sendPhonemes(phonemes).catch((err) => toast(describe(err)));
  }
});

update(setRoute(state, routeFromHash()));
