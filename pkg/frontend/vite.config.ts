import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    // The UI talks to the motion service; run it with
    //   python -m motionloom.cli serve --port 8000 ...
    proxy: {
      "/api": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "node",
  },
});
