"""命令处理层：RunConfig → 服务调用 → 渲染输出 → 退出码"""
