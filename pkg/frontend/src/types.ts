// Wire shapes of the availability service; field names match the server's
// datastore columns exactly.

export interface Store {
  store_id: number;
  store_name: string;
  store_long: number;
  store_lat: number;
  store_parking_total: number;
  store_parking_available: number;
  avg_traffic: number;
}

export interface InventoryItem {
  store_id: number;
  product_id: number;
  name: string;
  category: string;
  product_location: number;
  availability_in_store: number;
  price: string;
}

export interface AvailabilityRow {
  product_id: number;
  name: string;
  store_id: number;
  store_name: string;
  availability_in_store: number;
}

export interface Recommendation {
  store_id: number;
  store_name: string;
  product_score: number;
  parking_score: number;
  traffic_score: number;
  total: number;
}
