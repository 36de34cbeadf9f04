// Driver console: login/register, vehicles, profile, and the live parking
// dashboard. Plain DOM, no framework; every action is a thin call to the
// gateway API and the screen re-renders from the response.

import { api, ApiError, Ticket, Vehicle } from "./api.js";
import { pollIntervalMs } from "./config.js";
import {
  beginSession,
  cacheTickets,
  clearSession,
  newSession,
  SessionState,
} from "./session.js";
import { formatCost, formatTime, logLine, ticketRows, unpaidTicketIds } from "./tickets.js";

const state: SessionState = newSession();
const pendingPayments = new Set<string>();
let activeVehicleId: string | null = null;
let pollTimer: number | undefined;
let root: HTMLElement;

export function mount(element: HTMLElement): void {
  root = element;
  if (state.token) {
    void refreshAndShowDashboard();
  } else {
    renderLogin();
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function swap(...children: Node[]): void {
  root.replaceChildren(...children);
  const banner = el("div", { id: "flash", class: "flash" });
  root.prepend(banner);
}

function flash(message: string, ok = false): void {
  const banner = document.getElementById("flash");
  if (banner) {
    banner.textContent = message;
    banner.className = ok ? "flash ok" : "flash err";
  }
}

function handleAuthFailure(error: unknown): boolean {
  if (error instanceof ApiError && error.status === 401) {
    stopPolling();
    clearSession(state);
    renderLogin("Session expired, sign in again.");
    return true;
  }
  return false;
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return error.message;
  }
  return String(error);
}

// ---------------------------------------------------------------------------
// login / register

function renderLogin(notice = ""): void {
  stopPolling();
  const email = el("input", { type: "email", placeholder: "email", id: "login-email" });
  const password = el("input", {
    type: "password", placeholder: "password", id: "login-password",
  });
  const loginButton = el("button", { id: "login-submit" }, ["Sign in"]);
  loginButton.onclick = async () => {
    try {
      const payload = await api.login(email.value, password.value);
      beginSession(state, payload.token, payload.account, payload.vehicles);
      cacheFromBootstrap(payload.tickets);
      showDashboard();
    } catch (error) {
      flash(describe(error));
    }
  };

  const regEmail = el("input", { type: "email", placeholder: "email", id: "reg-email" });
  const regPassword = el("input", {
    type: "password", placeholder: "password (8+ chars, letters and digits)",
    id: "reg-password",
  });
  const regCode = el("input", { type: "text", placeholder: "activation code", id: "reg-code" });
  const registerButton = el("button", { id: "reg-submit" }, ["Register"]);
  registerButton.onclick = async () => {
    try {
      await api.register(regEmail.value, regPassword.value);
      flash("Registered. Check your email for the activation code.", true);
    } catch (error) {
      flash(describe(error));
    }
  };
  const activateButton = el("button", { id: "reg-activate" }, ["Activate"]);
  activateButton.onclick = async () => {
    try {
      await api.activate(regEmail.value, regCode.value);
      flash("Account activated. You can sign in now.", true);
    } catch (error) {
      flash(describe(error));
    }
  };

  swap(
    el("h1", {}, ["smartpark"]),
    el("section", { class: "card" }, [
      el("h2", {}, ["Sign in"]), email, password, loginButton,
    ]),
    el("section", { class: "card" }, [
      el("h2", {}, ["New driver"]), regEmail, regPassword, registerButton,
      regCode, activateButton,
    ]),
  );
  if (notice) {
    flash(notice);
  }
}

function cacheFromBootstrap(tickets: Ticket[]): void {
  for (const vehicle of state.vehicles) {
    cacheTickets(
      state, vehicle.vehicle_id,
      tickets.filter((t) => t.uid === vehicle.device_code),
    );
  }
}

// ---------------------------------------------------------------------------
// dashboard shell

async function refreshAndShowDashboard(): Promise<void> {
  try {
    const payload = await api.profile(state.token!);
    state.account = payload.account;
    state.vehicles = payload.vehicles;
    cacheFromBootstrap(payload.tickets);
    showDashboard();
  } catch (error) {
    if (!handleAuthFailure(error)) {
      renderLogin(describe(error));
    }
  }
}

function showDashboard(): void {
  if (!state.token) {
    renderLogin();
    return;
  }
  if (!activeVehicleId && state.vehicles.length > 0) {
    activeVehicleId = state.vehicles[0]!.vehicle_id;
  }
  const tabs = el("nav", {}, []);
  const parking = el("button", { id: "tab-parking" }, ["Parking"]);
  parking.onclick = () => void renderParking();
  const vehicles = el("button", { id: "tab-vehicles" }, ["Vehicles"]);
  vehicles.onclick = () => void renderVehicles();
  const profile = el("button", { id: "tab-profile" }, ["Profile"]);
  profile.onclick = () => void renderProfile();
  const logout = el("button", { id: "tab-logout" }, ["Sign out"]);
  logout.onclick = () => {
    stopPolling();
    clearSession(state);
    renderLogin("Signed out.");
  };
  tabs.append(parking, vehicles, profile, logout);
  swap(el("h1", {}, ["smartpark"]), tabs, el("main", { id: "view" }));
  void renderParking();
}

function view(): HTMLElement {
  return document.getElementById("view")!;
}

// ---------------------------------------------------------------------------
// vehicles

async function renderVehicles(): Promise<void> {
  stopPolling();
  try {
    const { vehicles } = await api.vehicles(state.token!);
    state.vehicles = vehicles;
  } catch (error) {
    if (handleAuthFailure(error)) return;
    flash(describe(error));
    return;
  }
  const list = el("table", { class: "vehicles", id: "vehicle-table" });
  list.append(el("tr", {}, [
    el("th", {}, ["Make"]), el("th", {}, ["Model"]), el("th", {}, ["Plate"]),
    el("th", {}, ["Device code"]), el("th", {}, ["Active"]), el("th", {}, [""]),
  ]));
  for (const vehicle of state.vehicles) {
    const activate = el("button", {}, [vehicle.active ? "Active" : "Activate"]);
    activate.toggleAttribute("disabled", vehicle.active);
    activate.onclick = async () => {
      try {
        await api.updateVehicle(state.token!, vehicle.vehicle_id, { activate: true });
        void renderVehicles();
      } catch (error) {
        if (!handleAuthFailure(error)) flash(describe(error));
      }
    };
    const remove = el("button", {}, ["Delete"]);
    remove.onclick = async () => {
      try {
        await api.deleteVehicle(state.token!, vehicle.vehicle_id);
        void renderVehicles();
      } catch (error) {
        if (!handleAuthFailure(error)) flash(describe(error));
      }
    };
    list.append(el("tr", {}, [
      el("td", {}, [vehicle.make]),
      el("td", {}, [vehicle.model]),
      el("td", {}, [vehicle.plate]),
      el("td", { class: "code" }, [vehicle.device_code]),
      el("td", {}, [vehicle.active ? el("span", { class: "badge" }, ["active"]) : ""]),
      el("td", {}, [activate, " ", remove]),
    ]));
  }

  const make = el("input", { placeholder: "make", id: "veh-make" });
  const model = el("input", { placeholder: "model", id: "veh-model" });
  const plate = el("input", { placeholder: "plate", id: "veh-plate" });
  const add = el("button", { id: "veh-add" }, ["Add vehicle"]);
  add.onclick = async () => {
    try {
      const vehicle = await api.addVehicle(state.token!, {
        make: make.value, model: model.value, plate: plate.value,
      });
      flash(`Vehicle added; device code ${vehicle.device_code}`, true);
      void renderVehicles();
    } catch (error) {
      if (!handleAuthFailure(error)) flash(describe(error));
    }
  };

  view().replaceChildren(
    el("h2", {}, ["Vehicles"]), list,
    el("section", { class: "card" }, [el("h3", {}, ["Add"]), make, model, plate, add]),
  );
}

// ---------------------------------------------------------------------------
// profile

async function renderProfile(): Promise<void> {
  stopPolling();
  const account = state.account;
  const name = el("input", {
    placeholder: "name", id: "lic-name",
    value: account?.license?.name ?? "",
  });
  const number = el("input", {
    placeholder: "license number", id: "lic-number",
    value: account?.license?.license_number ?? "",
  });
  const saveLicense = el("button", { id: "lic-save" }, ["Save license"]);
  saveLicense.onclick = async () => {
    try {
      await api.putLicense(state.token!, name.value, number.value);
      flash("License stored.", true);
    } catch (error) {
      if (!handleAuthFailure(error)) flash(describe(error));
    }
  };

  const nonce = el("input", {
    placeholder: "payment nonce (fake-valid-nonce)", id: "card-nonce",
    value: "fake-valid-nonce",
  });
  const saveCard = el("button", { id: "card-save" }, ["Save card"]);
  saveCard.onclick = async () => {
    try {
      const result = await api.putCard(state.token!, nonce.value);
      flash(result.message, true);
      void refreshAndShowDashboard();
    } catch (error) {
      // provider refusals (fraud screen, bad nonce) surface inline
      if (!handleAuthFailure(error)) flash(describe(error));
    }
  };

  view().replaceChildren(
    el("h2", {}, ["Profile"]),
    el("p", {}, [`Signed in as ${account?.email ?? "?"}`]),
    el("p", {}, [`Card on file: ${account?.card_present ? "yes" : "no"}`]),
    el("section", { class: "card" }, [el("h3", {}, ["Driver license"]), name, number,
                                      saveLicense]),
    el("section", { class: "card" }, [el("h3", {}, ["Credit card"]), nonce, saveCard]),
  );
}

// ---------------------------------------------------------------------------
// parking dashboard: logs + tickets + payment

async function renderParking(): Promise<void> {
  stopPolling();
  if (state.vehicles.length === 0) {
    view().replaceChildren(
      el("h2", {}, ["Parking"]),
      el("p", {}, ["Add a vehicle first; its device code drives auto check-in."]),
    );
    return;
  }
  const picker = el("select", { id: "vehicle-picker" });
  for (const vehicle of state.vehicles) {
    const option = el("option", { value: vehicle.vehicle_id }, [
      `${vehicle.make} ${vehicle.model} (${vehicle.plate})`,
    ]);
    if (vehicle.vehicle_id === activeVehicleId) {
      option.setAttribute("selected", "selected");
    }
    picker.append(option);
  }
  picker.onchange = () => {
    activeVehicleId = picker.value;
    void renderParking();
  };
  view().replaceChildren(
    el("h2", {}, ["Parking"]), picker,
    el("div", { id: "parking-tables" }),
  );
  await refreshParking();
  startPolling();
}

async function refreshParking(): Promise<void> {
  const vehicleId = activeVehicleId;
  if (!vehicleId || !state.token) {
    return;
  }
  try {
    const [logsDoc, ticketsDoc] = await Promise.all([
      api.logs(state.token, vehicleId),
      api.tickets(state.token, vehicleId),
    ]);
    cacheTickets(state, vehicleId, ticketsDoc.tickets);
    renderParkingTables(vehicleId, logsDoc.entries.map(logLine), ticketsDoc.tickets);
  } catch (error) {
    if (!handleAuthFailure(error)) {
      flash(describe(error));
    }
  }
}

function renderParkingTables(vehicleId: string, logLines: string[], tickets: Ticket[]): void {
  const container = document.getElementById("parking-tables");
  if (!container) {
    return;
  }
  const logList = el("ul", { class: "logs", id: "log-list" });
  for (const line of logLines) {
    logList.append(el("li", {}, [line]));
  }

  const table = el("table", { class: "tickets", id: "ticket-table" });
  table.append(el("tr", {}, [
    el("th", {}, ["Region"]), el("th", {}, ["Check-in"]), el("th", {}, ["Check-out"]),
    el("th", {}, ["Minutes"]), el("th", {}, ["Cost"]), el("th", {}, ["Status"]),
    el("th", {}, ["Anomalies"]), el("th", {}, [""]),
  ]));
  for (const row of ticketRows(tickets)) {
    const cell = el("td", {});
    if (row.payable) {
      const button = el("button", { "data-ticket": row.ticket_id }, ["Pay"]);
      button.toggleAttribute("disabled", pendingPayments.has(row.ticket_id));
      button.onclick = () => void payTickets([row.ticket_id]);
      cell.append(button);
    }
    table.append(el("tr", { "data-status": row.status }, [
      el("td", {}, [row.region]),
      el("td", {}, [formatTime(row.check_in)]),
      el("td", {}, [formatTime(row.check_out)]),
      el("td", {}, [String(row.duration_minutes ?? "—")]),
      el("td", {}, [formatCost(row.cost_minor_units)]),
      el("td", { class: `status-${row.status.toLowerCase()}` }, [row.status]),
      el("td", {}, [row.anomalies.join(", ")]),
      cell,
    ]));
  }

  const payAll = el("button", { id: "pay-all" }, ["Pay all unpaid"]);
  const unpaid = unpaidTicketIds(tickets);
  payAll.toggleAttribute(
    "disabled", unpaid.length === 0 || unpaid.some((id) => pendingPayments.has(id)),
  );
  payAll.onclick = () => void payTickets(unpaid);

  container.replaceChildren(
    el("h3", {}, ["Parking logs"]), logList,
    el("h3", {}, ["Tickets"]), table, payAll,
  );
}

async function payTickets(ticketIds: string[]): Promise<void> {
  const fresh = ticketIds.filter((id) => !pendingPayments.has(id));
  if (fresh.length === 0 || !state.token) {
    return;
  }
  for (const id of fresh) {
    pendingPayments.add(id);
  }
  try {
    const { results } = await api.pay(state.token, fresh);
    const failed = results.filter((r) => !r.ok);
    if (failed.length === 0) {
      flash(`Paid ${results.length} ticket(s).`, true);
    } else {
      flash(failed.map((r) => `${r.ticket_id.slice(0, 8)}…: ${r.reason}`).join("; "));
    }
  } catch (error) {
    if (handleAuthFailure(error)) {
      return;
    }
    flash(describe(error));
  } finally {
    for (const id of fresh) {
      pendingPayments.delete(id);
    }
  }
  await refreshParking();
}

// ---------------------------------------------------------------------------
// polling

function startPolling(): void {
  stopPolling();
  pollTimer = window.setInterval(() => void refreshParking(), pollIntervalMs());
}

function stopPolling(): void {
  if (pollTimer !== undefined) {
    clearInterval(pollTimer);
    pollTimer = undefined;
  }
}
