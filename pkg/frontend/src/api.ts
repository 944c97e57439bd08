import type { AvailabilityRow, InventoryItem, Recommendation, Store } from "./types.js";

/** Read-only client for the availability service; issues GETs only. */
export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, { method: "GET" });
    if (!response.ok) {
      throw new Error(`GET ${path} failed: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  getStores(): Promise<Store[]> {
    return this.get("/stores");
  }

  getStore(storeId: number): Promise<Store> {
    return this.get(`/stores/${storeId}`);
  }

  getStoreInventory(storeId: number): Promise<InventoryItem[]> {
    return this.get(`/stores/${storeId}/inventory`);
  }

  searchProducts(category: string): Promise<AvailabilityRow[]> {
    return this.get(`/products?category=${encodeURIComponent(category)}`);
  }

  recommend(productIds: number[]): Promise<Recommendation[]> {
    return this.get(`/recommend?product_ids=${productIds.join(",")}`);
  }

  /**
   * The service has no category endpoint, so the category list is derived
   * from the catalog entries visible through store inventories.
   */
  async listCategories(): Promise<string[]> {
    const stores = await this.getStores();
    const categories = new Set<string>();
    for (const store of stores) {
      const items = await this.getStoreInventory(store.store_id);
      for (const item of items) {
        categories.add(item.category);
      }
    }
    return [...categories].sort();
  }
}
