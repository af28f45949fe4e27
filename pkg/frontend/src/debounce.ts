// Responsiveness contract: slider changes debounce for 250 ms, and a panel
// only ever displays the response to its latest request; superseded
// in-flight responses are dropped on arrival.

export const DEBOUNCE_MS = 250;

export function debounce<A extends unknown[]>(
  durationMs: number,
  fn: (...args: A) => void,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => {
      timer = undefined;
      fn(...args);
    }, durationMs);
  };
}

export interface ResponseGate<T> {
  dispatch(pending: Promise<T>, onValue: (value: T) => void, onError?: (err: unknown) => void): void;
  invalidate(): void;
}

export function responseGate<T>(): ResponseGate<T> {
  let lastId = 0;
  return {
    dispatch: (pending, onValue, onError) => {
      lastId += 1;
      const thisId = lastId;
      pending.then(
        (value) => {
          if (thisId === lastId) {
            onValue(value);
          }
        },
        (err) => {
          if (thisId === lastId && onError) {
            onError(err);
          }
        },
      );
    },
    invalidate: () => {
      lastId += 1;
    },
  };
}
