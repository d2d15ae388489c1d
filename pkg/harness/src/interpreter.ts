/**
 * @fileoverview Task-language interpreter invocation over the wire protocol.
 *
 * A rendered driver script prints exactly one line to stdout:
 *
 *     OK <repr>                  value or verdict
 *     ERR <class>: <message>     the task program failed
 *
 * Running "guarded" wraps the script in the same compile/exec shield the
 * consuming sandbox uses, so syntax errors and definition-time crashes in
 * spliced code surface as ERR lines instead of nonzero exits. Anything
 * outside the protocol is a harness failure.
 */
import { spawnSync } from 'node:child_process'

export interface ProtocolResult {
  kind: 'ok' | 'err' | 'harness'
  value?: string
  errorClass?: string
  message?: string
}

export interface RunOptions {
  interpreter?: string
  timeoutMs?: number
  guarded?: boolean
}

const GUARD = [
  'import sys',
  '_real = sys.stdout',
  'source = sys.stdin.read()',
  'try:',
  '    code = compile(source, "<driver>", "exec")',
  '    exec(code, {"__name__": "__main__"})',
  'except BaseException as exc:',
  '    _real.write("ERR %s: %s\\n" % (type(exc).__name__, " ".join(str(exc).splitlines())))',
  '    _real.flush()',
].join('\n')

function scrubbedEnv(): NodeJS.ProcessEnv {
  const env: NodeJS.ProcessEnv = {}
  for (const key of ['PATH', 'HOME', 'LANG', 'LC_ALL']) {
    if (process.env[key] !== undefined) {
      env[key] = process.env[key]
    }
  }
  env.PYTHONHASHSEED = '0'
  env.PYTHONIOENCODING = 'utf-8'
  env.PYTHONDONTWRITEBYTECODE = '1'
  return env
}

function parseProtocol(stdout: string, status: number | null): ProtocolResult {
  if (status !== 0) {
    return { kind: 'harness', message: `exit ${status}` }
  }
  const lines = stdout.split('\n').filter((line) => line.length > 0)
  if (lines.length !== 1) {
    return { kind: 'harness', message: `malformed output (${lines.length} lines)` }
  }
  const line = lines[0]
  if (line.startsWith('OK ')) {
    return { kind: 'ok', value: line.slice(3) }
  }
  if (line.startsWith('ERR ')) {
    const body = line.slice(4)
    const sep = body.indexOf(': ')
    return {
      kind: 'err',
      errorClass: sep >= 0 ? body.slice(0, sep) : body,
      message: sep >= 0 ? body.slice(sep + 2) : '',
    }
  }
  return { kind: 'harness', message: 'malformed output' }
}

/** Execute a rendered driver script and parse its protocol line. */
export function runScript(script: string, options: RunOptions = {}): ProtocolResult {
  const interpreter = options.interpreter ?? 'python3'
  const argv = options.guarded ? ['-c', GUARD] : ['-']
  const proc = spawnSync(interpreter, argv, {
    input: script,
    encoding: 'utf-8',
    timeout: options.timeoutMs ?? 15000,
    env: scrubbedEnv(),
  })
  if (proc.error) {
    return { kind: 'harness', message: String(proc.error) }
  }
  return parseProtocol(proc.stdout ?? '', proc.status)
}

/** Compile-only pass: syntax check a rendered fixture without running it. */
export function compileOnly(
  script: string,
  interpreter = 'python3',
): { ok: boolean; message?: string } {
  const checker = "import sys; compile(sys.stdin.read(), '<fixture>', 'exec')"
  const proc = spawnSync(interpreter, ['-c', checker], {
    input: script,
    encoding: 'utf-8',
    timeout: 15000,
    env: scrubbedEnv(),
  })
  if (proc.error) {
    return { ok: false, message: String(proc.error) }
  }
  if (proc.status !== 0) {
    return { ok: false, message: (proc.stderr ?? '').trim() }
  }
  return { ok: true }
}
