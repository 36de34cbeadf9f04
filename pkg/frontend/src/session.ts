// Session state: token and cached server snapshots. The token lives in
// memory plus sessionStorage (never localStorage), and no authenticated
// view renders without it.

import type { Account, Ticket, Vehicle } from "./api.js";

const TOKEN_KEY = "smartpark.token";

export interface SessionState {
  token: string | null;
  account: Account | null;
  vehicles: Vehicle[];
  ticketsByVehicle: Record<string, Ticket[]>;
}

function storedToken(): string | null {
  try {
    return typeof sessionStorage !== "undefined" ? sessionStorage.getItem(TOKEN_KEY) : null;
  } catch {
    return null;
  }
}

export function newSession(): SessionState {
  return { token: storedToken(), account: null, vehicles: [], ticketsByVehicle: {} };
}

export function beginSession(state: SessionState, token: string, account: Account,
                             vehicles: Vehicle[]): void {
  state.token = token;
  state.account = account;
  state.vehicles = vehicles;
  state.ticketsByVehicle = {};
  try {
    if (typeof sessionStorage !== "undefined") {
      sessionStorage.setItem(TOKEN_KEY, token);
    }
  } catch {
    // storage unavailable: the token stays in memory only
  }
}

export function clearSession(state: SessionState): void {
  state.token = null;
  state.account = null;
  state.vehicles = [];
  state.ticketsByVehicle = {};
  try {
    if (typeof sessionStorage !== "undefined") {
      sessionStorage.removeItem(TOKEN_KEY);
    }
  } catch {
    // nothing to clear
  }
}

export function cacheTickets(state: SessionState, vehicleId: string, tickets: Ticket[]): void {
  state.ticketsByVehicle[vehicleId] = tickets;
}
