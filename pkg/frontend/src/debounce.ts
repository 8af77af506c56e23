/** Debounced, latest-wins request scheduling for live controls.
 *
 * Contract: after a burst of calls, exactly one request runs with the last
 * arguments; while a request is in flight at most one follow-up is queued
 * (latest wins); stale responses never overwrite newer ones. */

export const DEBOUNCE_MS = 150;

type Scheduler = (fn: () => void, ms: number) => unknown;
type Canceller = (handle: unknown) => void;

export class DebouncedRequester<A, R> {
  private timer: unknown = null;
  private pendingArgs: A | null = null;
  private inFlight = false;
  private queuedArgs: A | null = null;
  private generation = 0;
  /** Number of requests currently in flight (0 or 1); exposed for tests. */
  inFlightCount = 0;

  constructor(
    private run: (args: A) => Promise<R>,
    private onResult: (result: R, args: A) => void,
    private onError: (err: unknown) => void = () => {},
    private delayMs: number = DEBOUNCE_MS,
    private setTimer: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private clearTimer: Canceller = (h) => clearTimeout(h as number),
  ) {}

  /** Record the latest control state; the request fires after the debounce
   * window closes. */
  request(args: A): void {
    this.pendingArgs = args;
    if (this.timer !== null) {
      this.clearTimer(this.timer);
    }
    this.timer = this.setTimer(() => {
      this.timer = null;
      if (this.pendingArgs !== null) {
        this.dispatch(this.pendingArgs);
        this.pendingArgs = null;
      }
    }, this.delayMs);
  }

  private dispatch(args: A): void {
    if (this.inFlight) {
      this.queuedArgs = args; // latest wins; overwrite any older queued args
      return;
    }
    this.inFlight = true;
    this.inFlightCount += 1;
    const myGeneration = ++this.generation;
    this.run(args)
      .then((result) => {
        if (myGeneration === this.generation) {
          this.onResult(result, args);
        }
      })
      .catch((err) => this.onError(err))
      .finally(() => {
        this.inFlight = false;
        this.inFlightCount -= 1;
        if (this.queuedArgs !== null) {
          const next = this.queuedArgs;
          this.queuedArgs = null;
          this.dispatch(next);
        }
      });
  }
}
