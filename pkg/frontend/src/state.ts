// Navigation state: six screens, two flows from home, back edges only
// along the path taken.

export type Screen =
  | "home"
  | "store-list"
  | "store-detail"
  | "store-items"
  | "category-list"
  | "cross-store-table";

export const NAVIGATION: Record<Screen, Screen[]> = {
  home: ["store-list", "category-list"],
  "store-list": ["store-detail", "home"],
  "store-detail": ["store-items", "store-list"],
  "store-items": ["store-detail"],
  "category-list": ["cross-store-table", "home"],
  "cross-store-table": ["category-list"],
};

export interface ViewState {
  screen: Screen;
  storeId: number | null;
  category: string | null;
  lastFetchAt: number | null;
}

export const POLL_INTERVAL_MS = 2000;

export function initialState(): ViewState {
  return { screen: "home", storeId: null, category: null, lastFetchAt: null };
}

export class NavigationError extends Error {}

export function navigate(
  state: ViewState,
  to: Screen,
  params: { storeId?: number; category?: string } = {},
): ViewState {
  if (!NAVIGATION[state.screen].includes(to)) {
    throw new NavigationError(`cannot navigate from ${state.screen} to ${to}`);
  }
  const next: ViewState = { ...state, screen: to };
  if (to === "home") {
    next.storeId = null;
    next.category = null;
  }
  if (to === "store-detail" && params.storeId !== undefined) {
    next.storeId = params.storeId;
  }
  if (to === "cross-store-table" && params.category !== undefined) {
    next.category = params.category;
  }
  if ((to === "store-detail" || to === "store-items") && next.storeId === null) {
    throw new NavigationError(`${to} requires a selected store`);
  }
  if (to === "cross-store-table" && next.category === null) {
    throw new NavigationError("cross-store-table requires a selected category");
  }
  return next;
}

/** Every screen reachable from home over the navigation graph. */
export function reachableScreens(): Set<Screen> {
  const seen = new Set<Screen>(["home"]);
  const queue: Screen[] = ["home"];
  while (queue.length > 0) {
    const screen = queue.shift()!;
    for (const next of NAVIGATION[screen]) {
      if (!seen.has(next)) {
        seen.add(next);
        queue.push(next);
      }
    }
  }
  return seen;
}
