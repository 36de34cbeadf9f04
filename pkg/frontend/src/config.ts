// One injected configuration value: the gateway base URL. Served from the
// gateway itself (under /app) this stays "", i.e. same-origin.

declare global {
  interface Window {
    SMARTPARK_BASE_URL?: string;
    SMARTPARK_POLL_MS?: number;
  }
}

let base = typeof window !== "undefined" && window.SMARTPARK_BASE_URL
  ? window.SMARTPARK_BASE_URL
  : "";

export function baseUrl(): string {
  return base;
}

export function setBaseUrl(url: string): void {
  base = url.replace(/\/+$/, "");
}

export function pollIntervalMs(): number {
  if (typeof window !== "undefined" && window.SMARTPARK_POLL_MS) {
    return window.SMARTPARK_POLL_MS;
  }
  return 5000;
}
