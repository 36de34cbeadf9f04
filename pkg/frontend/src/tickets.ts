// Presentation helpers for the ticket and log tables. Rows mirror the
// gateway response verbatim: no cost or duration is recomputed here.

import type { LogEntry, Ticket } from "./api.js";

export interface TicketRow {
  ticket_id: string;
  region: string;
  check_in: number;
  check_out: number | null;
  duration_minutes: number | null;
  cost_minor_units: number | null;
  status: string;
  payment_ref: string | null;
  anomalies: string[];
  payable: boolean;
}

export function ticketRows(tickets: Ticket[]): TicketRow[] {
  return tickets.map((t) => ({
    ticket_id: t.ticket_id,
    region: t.region,
    check_in: t.check_in,
    check_out: t.check_out,
    duration_minutes: t.duration_minutes,
    cost_minor_units: t.cost_minor_units,
    status: t.status,
    payment_ref: t.payment_ref,
    anomalies: t.anomalies.map((a) => a.kind),
    payable: t.status === "Unpaid",
  }));
}

export function unpaidTicketIds(tickets: Ticket[]): string[] {
  return tickets.filter((t) => t.status === "Unpaid").map((t) => t.ticket_id);
}

export function formatTime(ms: number | null): string {
  if (ms === null) {
    return "—";
  }
  return new Date(ms).toISOString().replace("T", " ").slice(0, 19);
}

export function formatCost(minor: number | null): string {
  if (minor === null) {
    return "—";
  }
  return (minor / 100).toFixed(2);
}

export function logLine(entry: LogEntry): string {
  return `${formatTime(entry.time)}  ${entry.action}  ${entry.region}`;
}
