import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    testTimeout: 300_000,
    hookTimeout: 300_000,
    pool: "forks",
  },
});
