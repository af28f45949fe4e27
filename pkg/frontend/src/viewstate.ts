// Per-panel response state. Displayed data always comes from a completed
// response: a pending request marks the panel stale without clearing it,
// and a failure keeps the previous data alongside the error message.

export interface PanelState<T> {
  data: T | null;
  pending: boolean;
  error: string | null;
}

export function emptyPanel<T>(): PanelState<T> {
  return { data: null, pending: false, error: null };
}

export function beginRequest<T>(panel: PanelState<T>): PanelState<T> {
  return { ...panel, pending: true };
}

export function completeRequest<T>(_panel: PanelState<T>, data: T): PanelState<T> {
  return { data, pending: false, error: null };
}

export function failRequest<T>(panel: PanelState<T>, message: string): PanelState<T> {
  return { ...panel, pending: false, error: message };
}
