// End-to-end against a real seeded gateway: the ticket table mirrors
// GET /vehicles/{id}/tickets verbatim, and pay-all flips every unpaid
// row to Paid with exactly one mock charge per ticket.

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { api } from "../src/api.js";
import { setBaseUrl } from "../src/config.js";
import { ticketRows, unpaidTicketIds } from "../src/tickets.js";

const PORT = 3400 + (process.pid % 400);
const BASE = `http://127.0.0.1:${PORT}`;
const DEMO_EMAIL = "driver@example.com";
const DEMO_PASSWORD = "demo-pass-123";

let server: ChildProcess;

async function waitForGateway(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/ledger/status`);
      if (response.ok) {
        return;
      }
    } catch (error) {
      lastError = error;
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`gateway did not come up on ${BASE}: ${lastError}`);
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "smartpark-e2e-"));
  const config = join(dir, "gw.yaml");
  writeFileSync(config, [
    `bind: 127.0.0.1:${PORT}`,
    "secret: e2e-test-secret",
    "hash_rounds: 4",
    "providers: mock",
    'store_path: ":memory:"',
  ].join("\n"));
  server = spawn("parkgw", ["serve", "--config", config, "--demo"], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  await waitForGateway();
  setBaseUrl(BASE);
}, 40_000);

afterAll(() => {
  if (server) {
    server.kill("SIGTERM");
  }
});

describe("dashboard against a seeded gateway", () => {
  it("renders the ticket table verbatim and pay-all settles every row", async () => {
    const login = await api.login(DEMO_EMAIL, DEMO_PASSWORD);
    expect(login.token).toBeTruthy();
    expect(login.vehicles).toHaveLength(1);
    const vehicle = login.vehicles[0]!;

    // the table the dashboard renders is exactly the gateway response
    const before = await api.tickets(login.token, vehicle.vehicle_id);
    const rows = ticketRows(before.tickets);
    expect(rows.map((r) => ({
      ticket_id: r.ticket_id,
      region: r.region,
      check_in: r.check_in,
      check_out: r.check_out,
      duration_minutes: r.duration_minutes,
      cost_minor_units: r.cost_minor_units,
      status: r.status,
      payment_ref: r.payment_ref,
    }))).toEqual(before.tickets.map((t) => ({
      ticket_id: t.ticket_id,
      region: t.region,
      check_in: t.check_in,
      check_out: t.check_out,
      duration_minutes: t.duration_minutes,
      cost_minor_units: t.cost_minor_units,
      status: t.status,
      payment_ref: t.payment_ref,
    })));

    const unpaid = unpaidTicketIds(before.tickets);
    expect(unpaid.length).toBeGreaterThan(0);
    const n = unpaid.length;

    const { results } = await api.pay(login.token, unpaid);
    expect(results).toHaveLength(n);
    expect(results.every((r) => r.ok)).toBe(true);

    const after = await api.tickets(login.token, vehicle.vehicle_id);
    const settled = after.tickets.filter((t) => unpaid.includes(t.ticket_id));
    expect(settled.every((t) => t.status === "Paid" && t.payment_ref)).toBe(true);
    expect(unpaidTicketIds(after.tickets)).toEqual([]);

    // the payment mock recorded exactly N charges, once per ticket
    const charges = (await (await fetch(`${BASE}/debug/charges`)).json()).charges as {
      reference: string; outcome: string;
    }[];
    const approved = charges.filter((c) => c.outcome === "approved");
    expect(approved).toHaveLength(n);
    expect(new Set(approved.map((c) => c.reference)).size).toBe(n);

    // a second pay-all is a no-op: statuses unchanged, no new charges
    const again = await api.pay(login.token, unpaid);
    expect(again.results.every((r) => !r.ok)).toBe(true);
    const chargesAfter = (await (await fetch(`${BASE}/debug/charges`)).json()).charges as {
      outcome: string;
    }[];
    expect(chargesAfter.filter((c) => c.outcome === "approved")).toHaveLength(n);
  }, 30_000);

  it("rejects a bad login and bad tokens", async () => {
    await expect(api.login(DEMO_EMAIL, "wrong-password-1")).rejects.toThrow();
    await expect(api.vehicles("made.up.token")).rejects.toThrow();
  });
});
