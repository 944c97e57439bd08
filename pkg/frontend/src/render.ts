// DOM renderers: pure functions from fetched data to elements.  Every
// number shown comes from the most recent successful API response.

import type { AvailabilityRow, InventoryItem, Recommendation, Store } from "./types.js";

export const TRAFFIC_LABELS: Record<number, string> = {
  1: "light",
  2: "moderate",
  3: "heavy",
};

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function button(label: string, onClick: () => void, className = "nav-button"): HTMLElement {
  const node = el("button", className, label);
  node.addEventListener("click", onClick);
  return node;
}

export function renderHome(onStores: () => void, onCategories: () => void): HTMLElement {
  const view = el("div", "screen screen-home");
  view.appendChild(el("h1", "title", "Connected stores"));
  view.appendChild(button("Choose a store", onStores));
  view.appendChild(button("Search items in all stores", onCategories));
  return view;
}

export function renderStoreList(
  stores: Store[],
  onSelect: (storeId: number) => void,
  onBack: () => void,
): HTMLElement {
  const view = el("div", "screen screen-store-list");
  view.appendChild(el("h2", "title", "Stores"));
  const list = el("ul", "store-list");
  for (const store of stores) {
    const item = el("li", "store-row");
    item.appendChild(
      button(`${store.store_name}`, () => onSelect(store.store_id), "store-link"),
    );
    item.appendChild(
      el(
        "span",
        "store-summary",
        ` ${store.store_parking_available} of ${store.store_parking_total} spots`,
      ),
    );
    list.appendChild(item);
  }
  view.appendChild(list);
  view.appendChild(button("Back", onBack, "back-button"));
  return view;
}

export function renderStoreDetail(
  store: Store,
  stale: boolean,
  onItems: () => void,
  onBack: () => void,
): HTMLElement {
  const view = el("div", "screen screen-store-detail");
  view.appendChild(el("h2", "title", store.store_name));
  if (stale) {
    view.appendChild(el("div", "stale-banner", "connection lost, showing last known values"));
  }
  const full = store.store_parking_available === 0;
  const parking = el(
    "div",
    full ? "parking parking-full" : "parking",
    `${store.store_parking_available} of ${store.store_parking_total} spots`,
  );
  if (full) {
    parking.appendChild(el("span", "full-note", " — lot full"));
  }
  view.appendChild(parking);
  const label = TRAFFIC_LABELS[store.avg_traffic] ?? String(store.avg_traffic);
  view.appendChild(el("div", `traffic traffic-${label}`, `traffic: ${label}`));
  view.appendChild(button("Items in this store", onItems));
  view.appendChild(button("Back", onBack, "back-button"));
  return view;
}

export function renderStoreItems(
  items: InventoryItem[],
  onBack: () => void,
): HTMLElement {
  const view = el("div", "screen screen-store-items");
  view.appendChild(el("h2", "title", "Items available"));
  if (items.length === 0) {
    view.appendChild(el("div", "empty", "no items"));
  } else {
    const table = el("table", "items-table");
    const head = el("tr", "");
    for (const column of ["Item", "Aisle", "In stock", "Price"]) {
      head.appendChild(el("th", "", column));
    }
    table.appendChild(head);
    for (const item of items) {
      const row = el("tr", "item-row");
      row.appendChild(el("td", "", item.name));
      row.appendChild(el("td", "", String(item.product_location)));
      row.appendChild(el("td", "", String(item.availability_in_store)));
      row.appendChild(el("td", "", item.price));
      table.appendChild(row);
    }
    view.appendChild(table);
  }
  view.appendChild(button("Back", onBack, "back-button"));
  return view;
}

export function renderCategoryList(
  categories: string[],
  onSelect: (category: string) => void,
  onBack: () => void,
): HTMLElement {
  const view = el("div", "screen screen-category-list");
  view.appendChild(el("h2", "title", "Categories"));
  const list = el("ul", "category-list");
  for (const category of categories) {
    const item = el("li", "category-row");
    item.appendChild(button(category, () => onSelect(category), "category-link"));
    list.appendChild(item);
  }
  view.appendChild(list);
  view.appendChild(button("Back", onBack, "back-button"));
  return view;
}

export function renderCrossStoreTable(
  category: string,
  rows: AvailabilityRow[],
  recommendations: Recommendation[] | null,
  stale: boolean,
  onBack: () => void,
): HTMLElement {
  const view = el("div", "screen screen-cross-store-table");
  view.appendChild(el("h2", "title", `Availability: ${category}`));
  if (stale) {
    view.appendChild(el("div", "stale-banner", "connection lost, showing last known values"));
  }
  if (rows.length === 0) {
    view.appendChild(el("div", "empty", "no items"));
  } else {
    const stores = [...new Map(rows.map((r) => [r.store_id, r.store_name])).entries()].sort(
      (a, b) => a[0] - b[0],
    );
    const products = [...new Map(rows.map((r) => [r.product_id, r.name])).entries()].sort(
      (a, b) => a[0] - b[0],
    );
    const cells = new Map(rows.map((r) => [`${r.product_id}:${r.store_id}`, r.availability_in_store]));
    const table = el("table", "availability-table");
    const head = el("tr", "");
    head.appendChild(el("th", "", "Product"));
    for (const [, storeName] of stores) {
      head.appendChild(el("th", "", storeName));
    }
    table.appendChild(head);
    for (const [productId, productName] of products) {
      const row = el("tr", "availability-row");
      row.appendChild(el("td", "", productName));
      for (const [storeId] of stores) {
        const cell = el("td", "availability-cell", String(cells.get(`${productId}:${storeId}`) ?? 0));
        cell.dataset.productId = String(productId);
        cell.dataset.storeId = String(storeId);
        row.appendChild(cell);
      }
      table.appendChild(row);
    }
    view.appendChild(table);
  }
  if (recommendations && recommendations.length > 0) {
    const best = recommendations[0];
    const panel = el("div", "recommend-panel");
    panel.appendChild(el("h3", "", "Best store for this list"));
    panel.appendChild(
      el(
        "div",
        "recommend-best",
        `${best.store_name} (score ${best.total.toFixed(2)})`,
      ),
    );
    view.appendChild(panel);
  }
  view.appendChild(button("Back", onBack, "back-button"));
  return view;
}
