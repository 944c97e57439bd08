// In-test HTTP server speaking the availability service's wire format,
// with mutable state so tests can play the role of the telemetry path.

import http from "node:http";
import type { AddressInfo } from "node:net";
import type { AvailabilityRow, InventoryItem, Recommendation, Store } from "../src/types.js";

interface Product {
  product_id: number;
  name: string;
  category: string;
}

export class FixtureServer {
  stores: Store[] = [
    {
      store_id: 1,
      store_name: "Sultan_salmiyah",
      store_long: 29.342313,
      store_lat: 48.075153,
      store_parking_total: 3,
      store_parking_available: 2,
      avg_traffic: 2,
    },
    {
      store_id: 2,
      store_name: "Sultan_shaab",
      store_long: 29.340977,
      store_lat: 48.044217,
      store_parking_total: 3,
      store_parking_available: 3,
      avg_traffic: 3,
    },
  ];

  products: Product[] = [
    { product_id: 1, name: "Milk 1L", category: "dairy" },
    { product_id: 2, name: "Bread loaf", category: "bakery" },
    { product_id: 3, name: "Cheddar cheese", category: "dairy" },
    { product_id: 4, name: "Olive oil 750ml", category: "pantry" },
    { product_id: 5, name: "Basmati rice 1kg", category: "pantry" },
    { product_id: 6, name: "Laundry detergent", category: "household" },
  ];

  inventory = [
    { store_id: 1, product_id: 1, product_location: 1, availability_in_store: 5, price: "2.000" },
    { store_id: 1, product_id: 2, product_location: 2, availability_in_store: 4, price: "0.100" },
    { store_id: 1, product_id: 3, product_location: 3, availability_in_store: 1, price: "1.000" },
    { store_id: 1, product_id: 4, product_location: 4, availability_in_store: 5, price: "5.000" },
    { store_id: 1, product_id: 5, product_location: 4, availability_in_store: 1, price: "1.000" },
    { store_id: 1, product_id: 6, product_location: 6, availability_in_store: 6, price: "6.000" },
  ];

  requests: { method: string; path: string }[] = [];
  down = false;
  delayMs = 0;

  private server: http.Server;

  constructor() {
    this.server = http.createServer((req, res) => {
      if (this.delayMs > 0) {
        setTimeout(() => this.handle(req, res), this.delayMs);
      } else {
        this.handle(req, res);
      }
    });
  }

  async start(): Promise<string> {
    await new Promise<void>((resolve) => this.server.listen(0, "127.0.0.1", resolve));
    const { port } = this.server.address() as AddressInfo;
    return `http://127.0.0.1:${port}`;
  }

  async stop(): Promise<void> {
    await new Promise<void>((resolve, reject) =>
      this.server.close((err) => (err ? reject(err) : resolve())),
    );
  }

  setAvailability(storeId: number, available: number): void {
    const store = this.stores.find((s) => s.store_id === storeId)!;
    store.store_parking_available = available;
  }

  setTraffic(storeId: number, level: number): void {
    const store = this.stores.find((s) => s.store_id === storeId)!;
    store.avg_traffic = level;
  }

  private handle(req: http.IncomingMessage, res: http.ServerResponse): void {
    const url = new URL(req.url ?? "/", "http://fixture");
    this.requests.push({ method: req.method ?? "?", path: url.pathname });
    if (this.down) {
      req.socket.destroy();
      return;
    }
    const json = (status: number, body: unknown) => {
      res.writeHead(status, { "content-type": "application/json" });
      res.end(JSON.stringify(body));
    };

    const storeMatch = url.pathname.match(/^\/stores\/(\d+)(\/inventory)?$/);
    if (url.pathname === "/stores") {
      json(200, this.stores);
    } else if (storeMatch) {
      const store = this.stores.find((s) => s.store_id === Number(storeMatch[1]));
      if (!store) {
        json(404, { detail: "no such store" });
      } else if (storeMatch[2]) {
        json(200, this.storeInventory(store.store_id));
      } else {
        json(200, store);
      }
    } else if (url.pathname === "/products") {
      const category = url.searchParams.get("category");
      if (category === null) {
        json(400, { detail: "missing category" });
      } else {
        json(200, this.availabilityTable(category));
      }
    } else if (url.pathname === "/recommend") {
      const raw = url.searchParams.get("product_ids");
      if (!raw) {
        json(400, { detail: "missing product_ids" });
      } else {
        json(200, this.recommend(raw.split(",").map(Number)));
      }
    } else {
      json(404, { detail: "unknown path" });
    }
  }

  private storeInventory(storeId: number): InventoryItem[] {
    return this.inventory
      .filter((row) => row.store_id === storeId)
      .map((row) => ({
        ...row,
        name: this.products.find((p) => p.product_id === row.product_id)!.name,
        category: this.products.find((p) => p.product_id === row.product_id)!.category,
      }));
  }

  private availabilityTable(category: string): AvailabilityRow[] {
    const rows: AvailabilityRow[] = [];
    for (const product of this.products.filter((p) => p.category === category)) {
      for (const store of this.stores) {
        const inv = this.inventory.find(
          (r) => r.store_id === store.store_id && r.product_id === product.product_id,
        );
        rows.push({
          product_id: product.product_id,
          name: product.name,
          store_id: store.store_id,
          store_name: store.store_name,
          availability_in_store: inv?.availability_in_store ?? 0,
        });
      }
    }
    return rows;
  }

  private recommend(productIds: number[]): Recommendation[] {
    const scored = this.stores.map((store) => {
      const stocked = productIds.filter((pid) =>
        this.inventory.some(
          (r) => r.store_id === store.store_id && r.product_id === pid && r.availability_in_store > 0,
        ),
      ).length;
      const productScore = productIds.length ? stocked / productIds.length : 0;
      const parkingScore = store.store_parking_total
        ? store.store_parking_available / store.store_parking_total
        : 0;
      const trafficScore = (3 - store.avg_traffic) / 2;
      return {
        store_id: store.store_id,
        store_name: store.store_name,
        product_score: productScore,
        parking_score: parkingScore,
        traffic_score: trafficScore,
        total: (productScore + parkingScore + trafficScore) / 3,
      };
    });
    scored.sort((a, b) => b.total - a.total || a.store_id - b.store_id);
    return scored;
  }
}
