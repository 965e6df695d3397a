// Single source of truth for what the user is looking at. Every panel
// renders from one shared context; any selection change produces exactly
// one request per panel through planRequests, so linked views can never
// drift apart.

export interface ContextState {
  start: number;
  end: number;
  types: string[];
  locations: string[];
  users: string[];
  apps: string[];
}

export interface ViewState {
  context: ContextState;
  // zoom history for repeated sub-interval narrowing; index 0 is the session
  // root and the stack is never empty
  intervalStack: { start: number; end: number }[];
  live: boolean;
  tePair: [string | null, string | null];
  binWidthMs: number;
  groupBy: "cabinet" | "blade" | "node" | "application";
}

export interface PanelRequest {
  panel: string;
  path: string;
  params: Record<string, string>;
}

const sorted = (xs: string[]) => [...xs].sort();

export function initialState(start: number, end: number): ViewState {
  if (!(start < end)) throw new Error("interval start must precede end");
  return {
    context: { start, end, types: [], locations: [], users: [], apps: [] },
    intervalStack: [{ start, end }],
    live: false,
    tePair: [null, null],
    binWidthMs: defaultBinWidth(end - start),
    groupBy: "cabinet",
  };
}

export function defaultBinWidth(spanMs: number): number {
  // aim for ~120 bars
  const raw = Math.max(1000, Math.floor(spanMs / 120));
  return Math.ceil(raw / 1000) * 1000;
}

function withContext(state: ViewState, context: ContextState): ViewState {
  return { ...state, context };
}

export function pushInterval(state: ViewState, start: number, end: number): ViewState {
  if (!(start < end)) return state;
  const next = withContext(state, { ...state.context, start, end });
  next.intervalStack = [...state.intervalStack, { start, end }];
  next.binWidthMs = defaultBinWidth(end - start);
  return next;
}

export function popInterval(state: ViewState): ViewState {
  if (state.intervalStack.length <= 1) return state; // root stays
  const stack = state.intervalStack.slice(0, -1);
  const top = stack[stack.length - 1];
  const next = withContext(state, { ...state.context, start: top.start, end: top.end });
  next.intervalStack = stack;
  next.binWidthMs = defaultBinWidth(top.end - top.start);
  return next;
}

export function resetToRoot(state: ViewState): ViewState {
  const root = state.intervalStack[0];
  const next = withContext(state, { ...state.context, start: root.start, end: root.end });
  next.intervalStack = [root];
  next.binWidthMs = defaultBinWidth(root.end - root.start);
  return next;
}

function toggle(list: string[], value: string): string[] {
  return list.includes(value) ? list.filter((v) => v !== value) : sorted([...list, value]);
}

export function toggleType(state: ViewState, typeId: string): ViewState {
  return withContext(state, { ...state.context, types: toggle(state.context.types, typeId) });
}

export function toggleLocation(state: ViewState, selector: string): ViewState {
  return withContext(state, {
    ...state.context,
    locations: toggle(state.context.locations, selector),
  });
}

export function toggleUser(state: ViewState, user: string): ViewState {
  return withContext(state, { ...state.context, users: toggle(state.context.users, user) });
}

export function toggleApp(state: ViewState, app: string): ViewState {
  return withContext(state, { ...state.context, apps: toggle(state.context.apps, app) });
}

export function selectTeType(state: ViewState, typeId: string): ViewState {
  const [a, b] = state.tePair;
  if (a === typeId) return { ...state, tePair: [b, null] };
  if (b === typeId) return { ...state, tePair: [a, null] };
  if (a === null) return { ...state, tePair: [typeId, b] };
  return { ...state, tePair: [a, typeId] };
}

export function setLive(state: ViewState, live: boolean): ViewState {
  return { ...state, live };
}

export function setGroupBy(state: ViewState, groupBy: ViewState["groupBy"]): ViewState {
  return { ...state, groupBy };
}

// -- request planning --------------------------------------------------------

export function contextParams(ctx: ContextState): Record<string, string> {
  const params: Record<string, string> = {
    start: String(ctx.start),
    end: String(ctx.end),
  };
  if (ctx.types.length) params.types = sorted(ctx.types).join(",");
  if (ctx.locations.length) params.locations = sorted(ctx.locations).join(",");
  if (ctx.users.length) params.users = sorted(ctx.users).join(",");
  if (ctx.apps.length) params.apps = sorted(ctx.apps).join(",");
  return params;
}

// The heat map needs one concrete type: the first selected, else the caller's
// fallback (usually the first catalog type).
export function heatmapType(state: ViewState, fallback: string | null): string | null {
  return state.context.types[0] ?? fallback;
}

export function planRequests(state: ViewState, fallbackType: string | null): PanelRequest[] {
  const ctx = contextParams(state.context);
  const plans: PanelRequest[] = [];
  const heat = heatmapType(state, fallbackType);
  if (heat !== null) {
    const { types: _omit, ...heatCtx } = ctx;
    plans.push({ panel: "physical", path: "/heatmap", params: { ...heatCtx, type: heat } });
  }
  plans.push({
    panel: "temporal",
    path: "/histogram",
    params: { ...ctx, bin_width_ms: String(state.binWidthMs) },
  });
  plans.push({ panel: "table", path: "/query", params: ctx });
  plans.push({
    panel: "distribution",
    path: "/distribution",
    params: { ...ctx, group_by: state.groupBy },
  });
  plans.push({ panel: "bubbles", path: "/topterms", params: { ...ctx, n: "40" } });
  const [a, b] = state.tePair;
  if (a !== null && b !== null) {
    const span = state.context.end - state.context.start;
    const window = teWindowFor(span);
    const { types: _unused, ...teCtx } = ctx;
    plans.push({
      panel: "te",
      path: "/te",
      params: {
        ...teCtx,
        type_a: a,
        type_b: b,
        window_ms: String(window),
        step_ms: String(Math.max(window / 2, 1000)),
        bin_width_ms: "1000",
      },
    });
  }
  return plans;
}

export function teWindowFor(spanMs: number): number {
  // at least 3 one-second bins, at most ~16 windows over the span
  const window = Math.max(3000, Math.floor(spanMs / 16 / 1000) * 1000);
  return Math.min(window, Math.max(3000, Math.floor(spanMs / 1000) * 1000));
}

// Linked-view coherence check used by tests and debug assertions: every
// planned request must carry the same interval (and the same sub-filters
// where the endpoint accepts them).
export function plansShareContext(plans: PanelRequest[], ctx: ContextState): boolean {
  return plans.every(
    (p) => p.params.start === String(ctx.start) && p.params.end === String(ctx.end),
  );
}
