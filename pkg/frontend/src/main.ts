import { mount } from "./app.js";

document.addEventListener("DOMContentLoaded", () => {
  mount(document.getElementById("root")!);
});
