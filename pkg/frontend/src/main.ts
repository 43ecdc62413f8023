/** Browser entry point: mount the app on the static page. */

import { initApp } from "./app.js";

function mount(): void {
  const form = document.getElementById("form-root");
  const banner = document.getElementById("banner-root");
  const session = document.getElementById("session-root");
  if (form === null || banner === null || session === null) {
    throw new Error("index.html is missing the mount points");
  }
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "http://127.0.0.1:8000";
  void initApp({ form, banner, session }, baseUrl);
}

mount();
