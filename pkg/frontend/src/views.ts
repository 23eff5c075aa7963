// HTML renderers, one per window: main navigation, manual control, timer
// form and voice panel.  Pure string builders so they are testable without
// a DOM; interactivity is wired through data-action attributes.

import { commandWords, validateTimerForm } from "./state.js";
import { Appliance, TimerJob, ViewState } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function connectionBadge(state: ViewState): string {
  if (state.connection === "live") {
    return `<span class="badge live">live</span>`;
  }
  return `<span class="badge reconnecting">reconnecting…</span>`;
}

export function renderHeader(state: ViewState): string {
  const master = state.master ? "on" : "off";
  const disabled = state.connection !== "live" ? "disabled" : "";
  return `
    <header>
      <h1><a href="#/">hearth console</a></h1>
      <div class="header-right">
        ${connectionBadge(state)}
        <button data-action="master" data-on="${state.master ? "false" : "true"}"
                class="master ${master}" ${disabled}>master: ${master}</button>
      </div>
    </header>`;
}

export function renderNav(state: ViewState): string {
  const entry = (route: string, label: string) => {
    const active = state.route === route ? "active" : "";
    return `<a class="nav-entry ${active}" href="#/${route === "main" ? "" : route}">${label}</a>`;
  };
  return `<nav>${entry("manual", "Manual control")}${entry("timer", "Timer")}${entry("voice", "Voice command")}</nav>`;
}

export function renderMain(state: ViewState): string {
  const card = (route: string, title: string, text: string) => `
    <a class="mode-card" href="#/${route}">
      <h2>${title}</h2>
      <p>${text}</p>
    </a>`;
  const banner =
    state.connection !== "live"
      ? `<div class="banner warn">service unreachable, retrying…</div>`
      : "";
  return `
    ${banner}
    <section class="mode-cards">
      ${card("manual", "Manual control", "Per-appliance ON and OFF push buttons.")}
      ${card("timer", "Timer", "Schedule one-shot ON/OFF jobs by date and time.")}
      ${card("voice", "Voice command", "Command words or raw phoneme sequences.")}
    </section>`;
}

function ledDot(appliance: Appliance): string {
  return `<span class="led ${appliance.led ? "lit" : ""}" data-led="${appliance.channel}"></span>`;
}

export function renderManual(state: ViewState): string {
  const disabled = state.connection !== "live" ? "disabled" : "";
  const rows = state.appliances
    .map((a) => {
      const name = escapeHtml(a.name);
      return `
      <tr data-appliance="${name}">
        <td>${ledDot(a)}</td>
        <td class="name">${name}</td>
        <td class="kind">${escapeHtml(a.kind)}</td>
        <td class="state ${a.state}">${a.state}</td>
        <td>
          <button data-action="switch" data-selector="${a.channel}" data-state="on"
                  ${a.state === "on" ? "disabled" : disabled}>ON</button>
          <button data-action="switch" data-selector="${a.channel}" data-state="off"
                  ${a.state === "off" ? "disabled" : disabled}>OFF</button>
        </td>
      </tr>`;
    })
    .join("");
  return `
    <section>
      <h2>Manual control</h2>
      <table class="appliances">
        <thead><tr><th>LED</th><th>Name</th><th>Kind</th><th>State</th><th></th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
    </section>`;
}

function timerRow(t: TimerJob): string {
  const device = t.device ? escapeHtml(t.device) : `ch${t.channel}`;
  return `
    <tr data-timer="${t.id}" class="status-${t.status}">
      <td>${escapeHtml(t.fire_at)}</td>
      <td>${device}</td>
      <td>${t.desired}</td>
      <td class="status">${t.status}</td>
      <td>${t.status === "pending"
        ? `<button data-action="cancel-timer" data-id="${t.id}">cancel</button>`
        : ""}</td>
    </tr>`;
}

export function renderTimer(state: ViewState, formError = "", formWarning = ""): string {
  const options = state.appliances
    .map((a) => `<option value="${escapeHtml(a.name)}">${escapeHtml(a.name)}</option>`)
    .join("");
  const prefill = state.serverNow ? new Date(new Date(state.serverNow).getTime() + 60000) : null;
  const dateValue = prefill ? prefill.toISOString().slice(0, 10) : "";
  const timeValue = prefill ? prefill.toISOString().slice(11, 19) : "";
  const rows = state.timers.map(timerRow).join("");
  const serverNow = state.serverNow ? escapeHtml(state.serverNow) : "unknown";
  return `
    <section>
      <h2>Timer</h2>
      <p class="hint">Server time: <span id="server-now">${serverNow}</span> (UTC fields below)</p>
      <form id="timer-form">
        <label>Date <input name="date" placeholder="YYYY-MM-DD" value="${dateValue}"></label>
        <label>Time <input name="time" placeholder="HH:MM:SS" value="${timeValue}"></label>
        <label>Appliance <select name="device">${options}</select></label>
        <label>Action <select name="state"><option value="on">turn ON</option><option value="off">turn OFF</option></select></label>
        <button type="submit" ${state.connection !== "live" ? "disabled" : ""}>schedule</button>
        <span class="form-error">${escapeHtml(formError)}</span>
        <span class="form-warning">${escapeHtml(formWarning)}</span>
      </form>
      <table class="timers">
        <thead><tr><th>Fire at</th><th>Appliance</th><th>Action</th><th>Status</th><th></th></tr></thead>
        <tbody>${rows || `<tr><td colspan="5" class="empty">no jobs</td></tr>`}</tbody>
      </table>
    </section>`;
}

export function renderVoice(state: ViewState): string {
  const disabled = state.connection !== "live" ? "disabled" : "";
  const buttons = commandWords(state.appliances)
    .map(
      (word) =>
        `<button class="command" data-action="say-word" data-word="${escapeHtml(word)}" ${disabled}>${escapeHtml(word)}</button>`,
    )
    .join("");
  let banner = "";
  const c = state.lastCommand;
  if (c) {
    if (c.accepted) {
      const conf = c.confidence !== undefined ? ` · confidence ${c.confidence.toFixed(2)}` : "";
      const dist = c.distance !== undefined ? ` · distance ${c.distance}` : "";
      banner = `<div class="banner ok" id="command-banner">recognized <b>${escapeHtml(c.word ?? "")}</b>${dist}${conf}</div>`;
    } else {
      const best = c.bestWord ? ` (closest: ${escapeHtml(c.bestWord)})` : "";
      banner = `<div class="banner warn" id="command-banner">rejected: ${escapeHtml(c.reason ?? "")}${best}</div>`;
    }
  }
  return `
    <section>
      <h2>Voice command</h2>
      ${banner}
      <div class="command-grid">${buttons}</div>
      <form id="phoneme-form">
        <label>Phonemes <input name="phonemes" placeholder="L AY T AA N" ${disabled}></label>
        <button type="submit" ${disabled}>interpret</button>
      </form>
    </section>`;
}

export function renderApp(state: ViewState, formError = "", formWarning = ""): string {
  let panel: string;
  switch (state.route) {
    case "manual":
      panel = renderManual(state);
      break;
    case "timer":
      panel = renderTimer(state, formError, formWarning);
      break;
    case "voice":
      panel = renderVoice(state);
      break;
    default:
      panel = renderMain(state);
  }
  return `${renderHeader(state)}${renderNav(state)}<main>${panel}</main>`;
}

export { validateTimerForm };
