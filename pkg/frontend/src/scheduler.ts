/** Debounced, latest-wins request sequencing for live slider steering.
 *
 * Rapid state changes coalesce behind a 150 ms debounce; at most one
 * request is in flight; responses that were superseded by a newer
 * request are discarded, so the displayed image always corresponds to
 * the newest completed request.
 */

export interface ScheduledResult<R> {
  sequence: number;
  result: R;
}

type Transport<S, R> = (state: S) => Promise<R>;

export interface SchedulerHooks<R> {
  /** Called only for the newest completed request. */
  onResult: (result: R) => void;
  /** Called when a request fails and no newer one exists; previous image stays. */
  onError?: (error: unknown) => void;
}

export class RequestScheduler<S, R> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pendingState: S | null = null;
  private inFlight = false;
  private nextSequence = 0;
  private displayedSequence = -1;
  /** Requests actually issued, visible for tests and debugging. */
  issuedCount = 0;

  constructor(
    private readonly transport: Transport<S, R>,
    private readonly hooks: SchedulerHooks<R>,
    private readonly debounceMs = 150,
  ) {}

  /** Record a state change; the newest state wins once the debounce fires. */
  schedule(state: S): void {
    this.pendingState = state;
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.flush();
    }, this.debounceMs);
  }

  private async flush(): Promise<void> {
    if (this.inFlight || this.pendingState === null) {
      return;
    }
    const state = this.pendingState;
    this.pendingState = null;
    const sequence = this.nextSequence++;
    this.inFlight = true;
    this.issuedCount++;
    try {
      const result = await this.transport(state);
      if (sequence > this.displayedSequence) {
        this.displayedSequence = sequence;
        this.hooks.onResult(result);
      }
    } catch (error) {
      if (this.pendingState === null && this.hooks.onError) {
        this.hooks.onError(error);
      }
    } finally {
      this.inFlight = false;
      if (this.pendingState !== null) {
        // a change arrived mid-flight; issue exactly one follow-up
        void this.flush();
      }
    }
  }
}
