/**
 * @fileoverview Driver template loading and rendering.
 *
 * The five templates live under templates/ as plain text with {name}
 * placeholder slots. Rendering is a single verbatim substitution pass:
 * inserted program text is never re-scanned, and braces that are not a
 * known placeholder stay untouched.
 */
import { readFileSync } from 'node:fs'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

export const TEMPLATE_NAMES = [
  'validate',
  'determinism',
  'abduction_eval',
  'deduction_eval',
  'induction_eval',
] as const

export type TemplateName = (typeof TEMPLATE_NAMES)[number]

const PLACEHOLDER =
  /\{(code|inputs|gold_output|agent_input|agent_output|gold_inputs|gold_outputs|runs)\}/g

/** Thrown when a template slot has no binding; carries the slot name. */
export class RenderError extends Error {
  constructor(public readonly slot: string) {
    super(`placeholder {${slot}} is not bound`)
    this.name = 'RenderError'
  }
}

/** Package-root templates/ directory, resolved from the compiled module. */
export function templatesDir(): string {
  const here = dirname(fileURLToPath(import.meta.url))
  return join(here, '..', '..', 'templates')
}

export function templatePath(name: TemplateName): string {
  return join(templatesDir(), `${name}.py.tmpl`)
}

export function loadTemplate(name: TemplateName): string {
  return readFileSync(templatePath(name), 'utf-8')
}

/** Substitute every placeholder slot, single pass, verbatim values. */
export function render(body: string, bindings: Record<string, string>): string {
  return body.replace(PLACEHOLDER, (_match, slot: string) => {
    const value = bindings[slot]
    if (value === undefined) {
      throw new RenderError(slot)
    }
    return value
  })
}

export function renderTemplate(
  name: TemplateName,
  bindings: Record<string, string>,
): string {
  return render(loadTemplate(name), bindings)
}

/**
 * Python string literal for arbitrary text (repr equivalent), used for the
 * double-evaluation slots of the deduction and induction templates.
 * JSON escapes are valid Python escapes except astral-plane surrogate
 * pairs, which are folded into \U escapes.
 */
export function pythonStringLiteral(text: string): string {
  const json = JSON.stringify(text)
  return json.replace(
    /\\u([dD][89abAB][0-9a-fA-F]{2})\\u([dD][c-fC-F][0-9a-fA-F]{2})/g,
    (_m, high: string, low: string) => {
      const code =
        (parseInt(high, 16) - 0xd800) * 0x400 + (parseInt(low, 16) - 0xdc00) + 0x10000
      return `\\U${code.toString(16).padStart(8, '0')}`
    },
  )
}

/** Python list literal of string literals, for gold_inputs / gold_outputs. */
export function pythonListLiteral(texts: string[]): string {
  return `[${texts.map(pythonStringLiteral).join(', ')}]`
}

/** The identity-function seed task every template must handle. */
export const ZERO_TRIPLET = {
  program: 'def f(x):\n    return x',
  input: "'Hello World'",
  output: "'Hello World'",
} as const

/** Complete bindings for rendering each template against the seed task. */
export function zeroBindings(name: TemplateName): Record<string, string> {
  switch (name) {
    case 'validate':
      return { code: ZERO_TRIPLET.program, inputs: ZERO_TRIPLET.input }
    case 'determinism':
      return { code: ZERO_TRIPLET.program, inputs: ZERO_TRIPLET.input, runs: '2' }
    case 'abduction_eval':
      return {
        code: ZERO_TRIPLET.program,
        gold_output: ZERO_TRIPLET.output,
        agent_input: ZERO_TRIPLET.input,
      }
    case 'deduction_eval':
      return {
        code: ZERO_TRIPLET.program,
        gold_output: pythonStringLiteral(ZERO_TRIPLET.output),
        agent_output: pythonStringLiteral(ZERO_TRIPLET.output),
      }
    case 'induction_eval':
      return {
        code: ZERO_TRIPLET.program,
        gold_inputs: pythonListLiteral([ZERO_TRIPLET.input, "'x'"]),
        gold_outputs: pythonListLiteral([ZERO_TRIPLET.output, "'x'"]),
      }
  }
}
