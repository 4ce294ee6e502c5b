import { ApiClient } from "./api";
import { App, apiBaseFromLocation } from "./app";
import { showBanner } from "./dom";

const root = document.getElementById("app");
if (root) {
  const app = new App(root as HTMLElement, new ApiClient(apiBaseFromLocation()));
  app.init().catch((err) => showBanner(`failed to load ensemble: ${err}`));
  window.addEventListener("hashchange", () => {
    void app.init(app.readStateFromUrl()).catch((err) => showBanner(String(err)));
  });
}
