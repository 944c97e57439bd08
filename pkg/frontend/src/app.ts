import { ApiClient } from "./api.js";
import {
  POLL_INTERVAL_MS,
  Screen,
  ViewState,
  initialState,
  navigate,
} from "./state.js";
import {
  renderCategoryList,
  renderCrossStoreTable,
  renderHome,
  renderStoreDetail,
  renderStoreItems,
  renderStoreList,
} from "./render.js";
import type { AvailabilityRow, InventoryItem, Recommendation, Store } from "./types.js";

interface PanelData {
  stores: Store[];
  store: Store | null;
  items: InventoryItem[];
  categories: string[];
  table: AvailabilityRow[];
  recommendations: Recommendation[] | null;
}

export interface AppOptions {
  pollIntervalMs?: number;
}

/**
 * The single-page client.  One request in flight at a time; responses
 * superseded by a later navigation are discarded by sequence number.
 * Live screens re-fetch on a fixed polling interval; a failed fetch
 * keeps the last values and shows a stale banner.
 */
export class App {
  state: ViewState = initialState();
  stale = false;
  private data: PanelData = {
    stores: [],
    store: null,
    items: [],
    categories: [],
    table: [],
    recommendations: null,
  };
  private fetchSeq = 0;
  private inFlight = false;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private readonly pollIntervalMs: number;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    options: AppOptions = {},
  ) {
    this.pollIntervalMs = options.pollIntervalMs ?? POLL_INTERVAL_MS;
    this.render();
  }

  async goto(screen: Screen, params: { storeId?: number; category?: string } = {}): Promise<void> {
    const before = this.state;
    this.state = navigate(this.state, screen, params);
    this.stale = false;
    // never show another store's (or category's) numbers while loading
    if (screen === "store-detail" && this.state.storeId !== before.storeId) {
      this.data.store = null;
    }
    if (screen === "cross-store-table" && this.state.category !== before.category) {
      this.data.table = [];
      this.data.recommendations = null;
    }
    this.render();
    await this.refresh(true);
    this.configurePolling();
  }

  /**
   * Fetch whatever the current screen shows.  Poll ticks never stack
   * (one request in flight at a time); a navigation forces a fresh fetch
   * and the superseded response is dropped by its sequence number.
   */
  async refresh(force = false): Promise<void> {
    if (this.inFlight && !force) {
      return;
    }
    const seq = ++this.fetchSeq;
    const screen = this.state.screen;
    this.inFlight = true;
    try {
      if (screen === "store-list") {
        const stores = await this.api.getStores();
        if (seq !== this.fetchSeq) return;
        this.data.stores = stores;
      } else if (screen === "store-detail" && this.state.storeId !== null) {
        const store = await this.api.getStore(this.state.storeId);
        if (seq !== this.fetchSeq) return;
        this.data.store = store;
      } else if (screen === "store-items" && this.state.storeId !== null) {
        const items = await this.api.getStoreInventory(this.state.storeId);
        if (seq !== this.fetchSeq) return;
        this.data.items = items;
      } else if (screen === "category-list") {
        const categories = await this.api.listCategories();
        if (seq !== this.fetchSeq) return;
        this.data.categories = categories;
      } else if (screen === "cross-store-table" && this.state.category !== null) {
        const table = await this.api.searchProducts(this.state.category);
        if (seq !== this.fetchSeq) return;
        this.data.table = table;
        const productIds = [...new Set(table.map((row) => row.product_id))];
        if (productIds.length > 0) {
          const recommendations = await this.api.recommend(productIds);
          if (seq !== this.fetchSeq) return;
          this.data.recommendations = recommendations;
        } else {
          this.data.recommendations = null;
        }
      }
      this.stale = false;
      this.state.lastFetchAt = Date.now();
    } catch {
      this.stale = true;
    } finally {
      this.inFlight = false;
    }
    this.render();
  }

  private configurePolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
    const live = this.state.screen === "store-detail" || this.state.screen === "cross-store-table";
    if (live) {
      this.pollTimer = setInterval(() => {
        void this.refresh();
      }, this.pollIntervalMs);
    }
  }

  stop(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  render(): void {
    const go = (screen: Screen, params?: { storeId?: number; category?: string }) => () => {
      void this.goto(screen, params);
    };
    let view: HTMLElement;
    switch (this.state.screen) {
      case "home":
        view = renderHome(go("store-list"), go("category-list"));
        break;
      case "store-list":
        view = renderStoreList(
          this.data.stores,
          (storeId) => void this.goto("store-detail", { storeId }),
          go("home"),
        );
        break;
      case "store-detail":
        view = this.data.store
          ? renderStoreDetail(this.data.store, this.stale, go("store-items"), go("store-list"))
          : loading();
        break;
      case "store-items":
        view = renderStoreItems(this.data.items, go("store-detail"));
        break;
      case "category-list":
        view = renderCategoryList(
          this.data.categories,
          (category) => void this.goto("cross-store-table", { category }),
          go("home"),
        );
        break;
      case "cross-store-table":
        view = renderCrossStoreTable(
          this.state.category ?? "",
          this.data.table,
          this.data.recommendations,
          this.stale,
          go("category-list"),
        );
        break;
    }
    this.root.replaceChildren(view);
  }
}

function loading(): HTMLElement {
  const node = document.createElement("div");
  node.className = "screen screen-loading";
  node.textContent = "loading…";
  return node;
}
