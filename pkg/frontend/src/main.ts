import { mount } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const baseUrl = root.dataset.apiBase ?? "http://127.0.0.1:8000";
  const annotatorId = root.dataset.annotator ?? "anonymous";
  mount(root, baseUrl, { annotatorId, split: root.dataset.split || undefined });
}
