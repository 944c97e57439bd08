import { ApiClient } from "./api.js";
import { App } from "./app.js";

function apiBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery) {
    return fromQuery.replace(/\/$/, "");
  }
  return `${window.location.protocol}//${window.location.hostname}:8000`;
}

window.addEventListener("load", () => {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  new App(new ApiClient(apiBaseUrl()), root);
});
