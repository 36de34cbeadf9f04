// Typed client for the gateway's REST API. Every function is a thin fetch
// call; nothing is computed client-side that the server already returns.

import { baseUrl } from "./config.js";

export interface Account {
  account_id: string;
  email: string;
  license: { name: string; license_number: string } | null;
  card_present: boolean;
  push_registered: boolean;
}

export interface Vehicle {
  vehicle_id: string;
  model: string;
  make: string;
  plate: string;
  device_code: string;
  active: boolean;
}

export interface Anomaly {
  kind: string;
  entry_ids: string[];
}

export interface Ticket {
  ticket_id: string;
  uid: string;
  region: string;
  check_in: number;
  check_out: number | null;
  duration_minutes: number | null;
  cost_minor_units: number | null;
  status: "Open" | "Unpaid" | "Paid";
  payment_ref: string | null;
  anomalies: Anomaly[];
}

export interface LogEntry {
  id: string;
  uid: string;
  time: number;
  action: "CheckIn" | "CheckOut";
  region: string;
}

export interface LoginPayload {
  token: string;
  account: Account;
  vehicles: Vehicle[];
  logs: LogEntry[];
  tickets: Ticket[];
}

export interface PayResult {
  ticket_id: string;
  ok: boolean;
  payment_ref: string | null;
  amount: number | null;
  reason: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(
  method: string,
  path: string,
  options: { token?: string; body?: unknown } = {},
): Promise<T> {
  const headers: Record<string, string> = { "Content-Type": "application/json" };
  if (options.token) {
    headers["Authorization"] = `Bearer ${options.token}`;
  }
  const response = await fetch(baseUrl() + path, {
    method,
    headers,
    body: options.body === undefined ? undefined : JSON.stringify(options.body),
  });
  let doc: any = null;
  try {
    doc = await response.json();
  } catch {
    doc = null;
  }
  if (!response.ok) {
    const message = doc && doc.error ? String(doc.error) : `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return doc as T;
}

export const api = {
  register(email: string, password: string) {
    return request<{ account_id: string }>("POST", "/auth/register", {
      body: { email, password },
    });
  },
  activate(email: string, code: string) {
    return request<{ activated: boolean }>("POST", "/auth/activate", {
      body: { email, code },
    });
  },
  login(email: string, password: string) {
    return request<LoginPayload>("POST", "/auth/login", { body: { email, password } });
  },
  forgot(email: string) {
    return request<{ sent: boolean }>("POST", "/auth/forgot", { body: { email } });
  },
  reset(email: string, code: string, newPassword: string) {
    return request<{ reset: boolean }>("POST", "/auth/reset", {
      body: { email, code, new_password: newPassword },
    });
  },
  profile(token: string) {
    return request<Omit<LoginPayload, "token">>("GET", "/profile", { token });
  },
  vehicles(token: string) {
    return request<{ vehicles: Vehicle[] }>("GET", "/vehicles", { token });
  },
  addVehicle(token: string, v: { model: string; make: string; plate: string }) {
    return request<Vehicle>("POST", "/vehicles", { token, body: v });
  },
  updateVehicle(
    token: string,
    vehicleId: string,
    patch: { model?: string; make?: string; plate?: string; activate?: boolean },
  ) {
    return request<Vehicle>("PATCH", `/vehicles/${vehicleId}`, { token, body: patch });
  },
  deleteVehicle(token: string, vehicleId: string) {
    return request<{ deleted: boolean }>("DELETE", `/vehicles/${vehicleId}`, { token });
  },
  logs(token: string, vehicleId: string) {
    return request<{ entries: LogEntry[]; anomalies: Anomaly[] }>(
      "GET", `/vehicles/${vehicleId}/logs`, { token },
    );
  },
  tickets(token: string, vehicleId: string) {
    return request<{ tickets: Ticket[] }>("GET", `/vehicles/${vehicleId}/tickets`, { token });
  },
  pay(token: string, ticketIds: string[]) {
    return request<{ results: PayResult[] }>("POST", "/tickets/pay", {
      token,
      body: { ticket_ids: ticketIds },
    });
  },
  putLicense(token: string, name: string, licenseNumber: string) {
    return request<{ stored: boolean }>("PUT", "/profile/license", {
      token,
      body: { name, license_number: licenseNumber },
    });
  },
  putCard(token: string, paymentNonce: string) {
    return request<{ stored: boolean; message: string }>("PUT", "/profile/card", {
      token,
      body: { payment_nonce: paymentNonce },
    });
  },
  ledgerStatus() {
    return request<{ height: number; chain_valid: boolean }>("GET", "/ledger/status");
  },
};
