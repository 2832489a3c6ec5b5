// Canvas drawing for overlay payloads.
//
// The renderer never computes geometry: every ellipse vertex and skeleton
// joint comes verbatim from the /overlay payload.  Drawing goes through a
// small surface interface so tests can record exactly what would be put
// on a real canvas.

import type { OverlayPerson, OverlayResponse } from './types.js'

export const SAFE_COLOR = '#2fbf4f'
export const ALERT_COLOR = '#e03131'
export const SKELETON_COLOR = '#9db4d0'

// BODY-25 limb segments, used only to connect payload-provided joints
const SKELETON_EDGES: [number, number][] = [
  [0, 1], [1, 2], [2, 3], [3, 4], [1, 5], [5, 6], [6, 7],
  [1, 8], [8, 9], [9, 10], [10, 11], [8, 12], [12, 13], [13, 14],
  [11, 22], [11, 24], [14, 19], [14, 21],
]
const JOINT_CONFIDENCE_MIN = 0.05

export interface DrawSurface {
  clear(): void
  strokePolyline(points: [number, number][], color: string, close: boolean): void
  fillCircle(x: number, y: number, radius: number, color: string): void
}

export interface RenderStats {
  peopleDrawn: number
  ellipseVertices: [number, number][][]
  skeletonSegments: number
}

export function isOverlayResponse(payload: unknown): payload is OverlayResponse {
  if (typeof payload !== 'object' || payload === null) return false
  const p = payload as Record<string, unknown>
  if (typeof p.frame_id !== 'number' || !Array.isArray(p.people) || !Array.isArray(p.pairs)) {
    return false
  }
  return p.people.every((person) => {
    if (typeof person !== 'object' || person === null) return false
    const q = person as Record<string, unknown>
    if (typeof q.person_index !== 'number' || typeof q.violating !== 'boolean') return false
    if (q.ellipse !== null && !Array.isArray(q.ellipse)) return false
    return Array.isArray(q.keypoints)
  })
}

function drawSkeleton(surface: DrawSurface, person: OverlayPerson): number {
  let segments = 0
  for (const [a, b] of SKELETON_EDGES) {
    const ja = person.keypoints[a]
    const jb = person.keypoints[b]
    if (!ja || !jb) continue
    if (ja[2] <= JOINT_CONFIDENCE_MIN || jb[2] <= JOINT_CONFIDENCE_MIN) continue
    surface.strokePolyline([[ja[0], ja[1]], [jb[0], jb[1]]], SKELETON_COLOR, false)
    segments += 1
  }
  return segments
}

/**
 * Draw an overlay payload.  Invalid payloads raise before anything is
 * drawn, so a schema mismatch never leaves a partial frame on screen.
 */
export function renderOverlay(
  surface: DrawSurface,
  payload: unknown,
  options: { drawSkeletons: boolean },
): RenderStats {
  if (!isOverlayResponse(payload)) {
    throw new Error('overlay payload does not match the expected schema')
  }
  surface.clear()
  const stats: RenderStats = { peopleDrawn: 0, ellipseVertices: [], skeletonSegments: 0 }
  for (const person of payload.people) {
    if (options.drawSkeletons) {
      stats.skeletonSegments += drawSkeleton(surface, person)
    }
    if (person.ellipse === null || person.ellipse.length === 0) continue
    const color = person.violating ? ALERT_COLOR : SAFE_COLOR
    surface.strokePolyline(person.ellipse, color, true)
    if (person.ground_point !== null) {
      surface.fillCircle(person.ground_point[0], person.ground_point[1], 3, color)
    }
    stats.peopleDrawn += 1
    stats.ellipseVertices.push(person.ellipse)
  }
  return stats
}

/** Adapter from the surface interface onto a real 2D canvas context. */
export function canvasSurface(ctx: CanvasRenderingContext2D, width: number, height: number): DrawSurface {
  return {
    clear() {
      ctx.clearRect(0, 0, width, height)
    },
    strokePolyline(points, color, close) {
      if (points.length === 0) return
      ctx.beginPath()
      ctx.moveTo(points[0][0], points[0][1])
      for (let i = 1; i < points.length; i++) {
        ctx.lineTo(points[i][0], points[i][1])
      }
      if (close) ctx.closePath()
      ctx.strokeStyle = color
      ctx.lineWidth = 1.5
      ctx.stroke()
    },
    fillCircle(x, y, radius, color) {
      ctx.beginPath()
      ctx.arc(x, y, radius, 0, 2 * Math.PI)
      ctx.fillStyle = color
      ctx.fill()
    },
  }
}
