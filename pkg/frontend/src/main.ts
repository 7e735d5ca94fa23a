import { ConsoleClient } from "./client.js";
import { ConsoleStore } from "./store.js";
import { Dashboard } from "./dashboard.js";

function serviceUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("ws") ?? `ws://${window.location.hostname || "127.0.0.1"}:8765`;
}

const store = new ConsoleStore();
const client = new ConsoleClient(store, { url: serviceUrl() });
const root = document.getElementById("console-root");
if (!root) throw new Error("missing #console-root");
new Dashboard(root, store, client);
client.connect();
