// Single-page state machine for the tuner.
//
// The sliders own the truth about the requested ratios; every overlay and
// metrics response carries the request sequence number it was issued for,
// and anything stale (an older sequence than the last applied one) is
// dropped so the drawn overlay always corresponds to the displayed slider
// values.

import type { BodyPart, MetricsResponse, OverlayResponse } from './types.js'

export const RATIO_MIN = 0.01
export const RATIO_MAX = 1.0
export const RATIO_STEP = 0.01

export interface UiState {
  frameIndex: number
  nFrames: number
  rhoH: number
  rhoV: number
  part: BodyPart
  overlay: OverlayResponse | null
  metrics: MetricsResponse | null
  overlaySeq: number // last sequence applied to `overlay`
  metricsSeq: number
  nextSeq: number
  error: string | null
}

export function initialState(): UiState {
  return {
    frameIndex: 0,
    nFrames: 0,
    rhoH: 1.0,
    rhoV: 1.0,
    part: 'torso',
    overlay: null,
    metrics: null,
    overlaySeq: -1,
    metricsSeq: -1,
    nextSeq: 0,
    error: null,
  }
}

export function clampRatio(value: number): number {
  if (!Number.isFinite(value)) return RATIO_MAX
  const snapped = Math.round(value / RATIO_STEP) * RATIO_STEP
  const bounded = Math.min(RATIO_MAX, Math.max(RATIO_MIN, snapped))
  // keep two decimals exact so the query string stays stable
  return Math.round(bounded * 100) / 100
}

export function clampFrame(index: number, nFrames: number): number {
  if (nFrames <= 0) return 0
  return Math.min(nFrames - 1, Math.max(0, Math.trunc(index)))
}

export function setSlider(state: UiState, which: 'rhoH' | 'rhoV', value: number): UiState {
  return { ...state, [which]: clampRatio(value) }
}

export function issueRequest(state: UiState): { state: UiState; seq: number } {
  const seq = state.nextSeq
  return { state: { ...state, nextSeq: seq + 1 }, seq }
}

/** Apply an overlay response unless a newer one has already landed. */
export function acceptOverlay(
  state: UiState,
  seq: number,
  payload: OverlayResponse,
): UiState {
  if (seq <= state.overlaySeq) return state
  return { ...state, overlay: payload, overlaySeq: seq, error: null }
}

export function acceptMetrics(
  state: UiState,
  seq: number,
  payload: MetricsResponse,
): UiState {
  if (seq <= state.metricsSeq) return state
  return { ...state, metrics: payload, metricsSeq: seq }
}

export function setError(state: UiState, message: string): UiState {
  return { ...state, error: message }
}

export function clearError(state: UiState): UiState {
  return state.error === null ? state : { ...state, error: null }
}

/** F1 readout shown in the metrics panel, 4 decimal places. */
export function formatF1(metrics: MetricsResponse | null): string {
  if (metrics === null) return '—'
  return metrics.f1.toFixed(4)
}

export function formatMetricsLine(metrics: MetricsResponse | null): string {
  if (metrics === null) return 'no groundtruth loaded'
  return (
    `P ${metrics.precision.toFixed(4)}  R ${metrics.recall.toFixed(4)}` +
    `  (TP ${metrics.tp} / FP ${metrics.fp} / FN ${metrics.fn})`
  )
}
