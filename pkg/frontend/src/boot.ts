/**
 * Browser entry point. Mounts the app on #app using the current URL
 * fragment, pointing at the service named by data-api-base on the
 * mount node (same origin by default).
 */

import { createApp } from "./main.js";

const mount = document.getElementById("app");
if (mount) {
  const baseUrl = mount.dataset.apiBase ?? "";
  createApp(mount, {
    baseUrl,
    fragment: location.hash,
  });
}
