// Display-consistency checks against captured backend output.
//
// The fixtures are real responses from the tuning service plus the
// matching command-line evaluation report, regenerated with
// frontend/scripts/make_fixtures.py.  They pin two guarantees: the F1 the
// panel shows for a saved ratio pair is exactly what the CLI reports, and
// the canvas receives the overlay payload's vertices untouched.

import { readFileSync } from 'node:fs'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

import { describe, expect, it } from 'vitest'

import { renderOverlay, type DrawSurface } from '../src/render.js'
import { formatF1 } from '../src/state.js'
import type { MetricsResponse, OverlayResponse } from '../src/types.js'

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), 'fixtures')

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), 'utf-8')) as T
}

describe('metrics panel vs CLI report', () => {
  it('shows the same F1 to four decimal places', () => {
    const metrics = fixture<MetricsResponse>('metrics_response.json')
    const report = fixture<{ metrics: { f1: number } }>('cli_report.json')
    expect(formatF1(metrics)).toBe(report.metrics.f1.toFixed(4))
    // the underlying numbers agree bit for bit, not just when rounded
    expect(metrics.f1).toBe(report.metrics.f1)
  })
})

describe('overlay fidelity', () => {
  it('draws the payload vertices byte for byte', () => {
    const payload = fixture<OverlayResponse>('overlay_response.json')
    const drawn: [number, number][][] = []
    const surface: DrawSurface = {
      clear: () => {},
      strokePolyline: (points, _color, close) => {
        if (close) drawn.push(points)
      },
      fillCircle: () => {},
    }
    const stats = renderOverlay(surface, payload, { drawSkeletons: false })
    const expected = payload.people
      .filter((p) => p.ellipse !== null && p.ellipse.length > 0)
      .map((p) => p.ellipse)
    expect(stats.peopleDrawn).toBe(expected.length)
    expect(JSON.stringify(drawn)).toBe(JSON.stringify(expected))
  })

  it('flags both members of a violating pair', () => {
    const payload = fixture<OverlayResponse>('overlay_response.json')
    const violating = new Set<number>()
    for (const pair of payload.pairs) {
      if (pair.violation) {
        violating.add(pair.a)
        violating.add(pair.b)
      }
    }
    for (const person of payload.people) {
      expect(person.violating).toBe(violating.has(person.person_index))
    }
  })
})
