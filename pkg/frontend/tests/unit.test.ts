// Data-layer tests against a mocked fetch: the client sends what the
// gateway expects and surfaces exactly what it returns.

import { afterEach, describe, expect, it, vi } from "vitest";

import { api, ApiError, Ticket } from "../src/api.js";
import { setBaseUrl } from "../src/config.js";
import { beginSession, cacheTickets, clearSession, newSession } from "../src/session.js";
import { ticketRows, unpaidTicketIds } from "../src/tickets.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const sampleTicket: Ticket = {
  ticket_id: "t-1",
  uid: "PV-1",
  region: "DB",
  check_in: 60_000,
  check_out: 180_000,
  duration_minutes: 2,
  cost_minor_units: 6,
  status: "Unpaid",
  payment_ref: null,
  anomalies: [{ kind: "DuplicateCheckIn", entry_ids: ["e-9"] }],
};

afterEach(() => {
  vi.restoreAllMocks();
  setBaseUrl("");
});

describe("api client", () => {
  it("sends the bearer token and parses the response", async () => {
    const mock = vi.spyOn(globalThis, "fetch").mockResolvedValue(
      jsonResponse(200, { tickets: [sampleTicket] }),
    );
    setBaseUrl("http://127.0.0.1:9");
    const doc = await api.tickets("tok-123", "veh-1");
    expect(doc.tickets).toEqual([sampleTicket]);
    const [url, init] = mock.mock.calls[0]!;
    expect(url).toBe("http://127.0.0.1:9/vehicles/veh-1/tickets");
    expect((init!.headers as Record<string, string>)["Authorization"]).toBe("Bearer tok-123");
  });

  it("raises ApiError with the server's message on failure", async () => {
    vi.spyOn(globalThis, "fetch").mockImplementation(async () =>
      jsonResponse(401, { error: "token expired" }),
    );
    await expect(api.vehicles("bad")).rejects.toThrowError(ApiError);
    await expect(api.vehicles("bad")).rejects.toThrow("token expired");
  });

  it("posts payment ids verbatim", async () => {
    const mock = vi.spyOn(globalThis, "fetch").mockResolvedValue(
      jsonResponse(200, { results: [] }),
    );
    await api.pay("tok", ["a", "b"]);
    const [, init] = mock.mock.calls[0]!;
    expect(JSON.parse(String(init!.body))).toEqual({ ticket_ids: ["a", "b"] });
  });
});

describe("ticket rows", () => {
  it("mirror the gateway response without recomputation", () => {
    const rows = ticketRows([sampleTicket]);
    expect(rows).toHaveLength(1);
    const row = rows[0]!;
    expect(row.cost_minor_units).toBe(sampleTicket.cost_minor_units);
    expect(row.duration_minutes).toBe(sampleTicket.duration_minutes);
    expect(row.status).toBe("Unpaid");
    expect(row.anomalies).toEqual(["DuplicateCheckIn"]);
    expect(row.payable).toBe(true);
  });

  it("only unpaid tickets are payable", () => {
    const paid: Ticket = { ...sampleTicket, ticket_id: "t-2", status: "Paid",
                           payment_ref: "pay_x" };
    const open: Ticket = { ...sampleTicket, ticket_id: "t-3", status: "Open",
                           check_out: null, cost_minor_units: null };
    expect(unpaidTicketIds([sampleTicket, paid, open])).toEqual(["t-1"]);
    const rows = ticketRows([paid, open]);
    expect(rows.every((r) => !r.payable)).toBe(true);
  });
});

describe("session state", () => {
  it("holds token and caches per-vehicle tickets", () => {
    const session = newSession();
    expect(session.token).toBeNull();
    beginSession(session, "tok-1", {
      account_id: "a", email: "e@x.io", license: null,
      card_present: false, push_registered: false,
    }, []);
    expect(session.token).toBe("tok-1");
    cacheTickets(session, "veh-1", [sampleTicket]);
    expect(session.ticketsByVehicle["veh-1"]).toEqual([sampleTicket]);
    clearSession(session);
    expect(session.token).toBeNull();
    expect(session.ticketsByVehicle).toEqual({});
  });
});
