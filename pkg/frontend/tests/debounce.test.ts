import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { DEBOUNCE_MS, DebouncedRequester } from "../src/debounce.js";

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (v: T) => void;
  reject: (e: unknown) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (v: T) => void;
  let reject!: (e: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

describe("DebouncedRequester", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("fires one request with the last arguments after a burst", async () => {
    const calls: number[] = [];
    const results: number[] = [];
    const requester = new DebouncedRequester<number, number>(
      async (n) => {
        calls.push(n);
        return n * 10;
      },
      (r) => results.push(r),
    );

    for (let i = 1; i <= 5; i++) {
      requester.request(i);
      vi.advanceTimersByTime(50); // inside the 150 ms window each time
    }
    expect(calls).toEqual([]);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(calls).toEqual([5]);
    expect(results).toEqual([50]);
  });

  it("keeps at most one request in flight and queues only the latest", async () => {
    const pending: Deferred<string>[] = [];
    const started: number[] = [];
    const requester = new DebouncedRequester<number, string>(
      (n) => {
        started.push(n);
        const d = deferred<string>();
        pending.push(d);
        return d.promise;
      },
      () => {},
    );

    requester.request(1);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(started).toEqual([1]);
    expect(requester.inFlightCount).toBe(1);

    // three more changes while the first request is still in flight
    for (const n of [2, 3, 4]) {
      requester.request(n);
      await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    }
    expect(requester.inFlightCount).toBe(1); // never more than one

    pending[0].resolve("a");
    await vi.advanceTimersByTimeAsync(0);
    expect(started).toEqual([1, 4]); // intermediate positions 2 and 3 skipped

    pending[1].resolve("b");
    await vi.advanceTimersByTimeAsync(0);
    expect(requester.inFlightCount).toBe(0);
  });

  it("final rendered state matches the last slider position", async () => {
    const pending: Deferred<number>[] = [];
    let rendered = -1;
    const requester = new DebouncedRequester<number, number>(
      () => {
        const d = deferred<number>();
        pending.push(d);
        return d.promise;
      },
      (r) => {
        rendered = r;
      },
    );

    requester.request(1);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    requester.request(2);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

    // the stale first response arrives after the second request started
    pending[0].resolve(100);
    await vi.advanceTimersByTimeAsync(0);
    pending[1].resolve(200);
    await vi.advanceTimersByTimeAsync(0);
    expect(rendered).toBe(200);
  });

  it("routes failures to the error handler and recovers", async () => {
    const errors: unknown[] = [];
    let ok = 0;
    const requester = new DebouncedRequester<number, number>(
      async (n) => {
        if (n < 0) throw new Error("boom");
        return n;
      },
      () => {
        ok += 1;
      },
      (e) => errors.push(e),
    );

    requester.request(-1);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(errors).toHaveLength(1);

    requester.request(3);
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(ok).toBe(1);
  });
});
