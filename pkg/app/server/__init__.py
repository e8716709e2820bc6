# runs 目录的只读浏览服务
