import { defineConfig } from "vite";

export default defineConfig({
  server: {
    proxy: {
      // forward API calls to a locally running `adain serve`
      "/api": {
        target: process.env.ADAIN_SERVICE_URL ?? "http://localhost:8080",
        changeOrigin: true,
      },
    },
  },
});
