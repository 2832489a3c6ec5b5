// Thin typed client for the tuning service endpoints.

import type { MetricsResponse, OverlayResponse, SessionState } from './types.js'

export interface OverlayQuery {
  frame: number
  rhoH: number
  rhoV: number
  part: string
}

export function overlayUrl(base: string, q: OverlayQuery): string {
  const params = new URLSearchParams({
    frame: String(q.frame),
    rho_h: String(q.rhoH),
    rho_v: String(q.rhoV),
    part: q.part,
  })
  return `${base}/overlay?${params.toString()}`
}

export function metricsUrl(base: string, q: Omit<OverlayQuery, 'frame'>): string {
  const params = new URLSearchParams({
    rho_h: String(q.rhoH),
    rho_v: String(q.rhoV),
    part: q.part,
  })
  return `${base}/metrics?${params.toString()}`
}

export function frameUrl(base: string, frameId: number): string {
  return `${base}/frames/${frameId}`
}

async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url)
  if (!response.ok) {
    throw new Error(`${url} -> HTTP ${response.status}`)
  }
  return (await response.json()) as T
}

export function fetchSession(base: string): Promise<SessionState> {
  return getJson<SessionState>(`${base}/session`)
}

export function fetchOverlay(base: string, q: OverlayQuery): Promise<OverlayResponse> {
  return getJson<OverlayResponse>(overlayUrl(base, q))
}

export function fetchMetrics(
  base: string,
  q: Omit<OverlayQuery, 'frame'>,
): Promise<MetricsResponse> {
  return getJson<MetricsResponse>(metricsUrl(base, q))
}

/** Commit the current ratios to the session log (the explicit Save). */
export async function postParams(
  base: string,
  rhoH: number,
  rhoV: number,
  part: string,
): Promise<SessionState> {
  const response = await fetch(`${base}/params`, {
    method: 'POST',
    headers: { 'content-type': 'application/json' },
    body: JSON.stringify({ rho_h: rhoH, rho_v: rhoV, part }),
  })
  if (!response.ok) {
    throw new Error(`POST /params -> HTTP ${response.status}`)
  }
  return (await response.json()) as SessionState
}
